use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod io;
mod manifest;

use commands::{bench, calibrate, fit, simulate, solve};

/// Penalized least-squares solvers and Bayesian variable selection.
#[derive(Debug, Parser)]
#[command(name = "icf-bvsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve (XᵗX + Σ²)β = z for one system.
    Solve(solve::SolveArgs),
    /// Time the iterative solvers against the direct solve.
    Bench(bench::BenchArgs),
    /// Simulate genotypes, a phenotype and the true effects.
    Simulate(simulate::SimulateArgs),
    /// Run the BVSR sampler on a genotype and a phenotype file.
    Fit(fit::FitArgs),
    /// Bin PIPs against known causal status.
    Calibrate(calibrate::CalibrateArgs),
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("ICF_BVSR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("ICF_BVSR_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        anyhow::bail!("ICF_BVSR_THREADS must be a positive integer, got `{raw}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Solve(a) => solve::run(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Calibrate(a) => calibrate::run(&a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
