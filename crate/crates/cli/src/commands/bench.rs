use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use icf_bvsr::sim::{
    run_benchmark, summarize, write_bench_results, write_bench_summary, write_error_dist, BenchConfig, DesignMode,
};
use icf_bvsr::solvers::Method;

use super::{create, ensure_dir};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Design modes to run (default: both).
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<DesignMode>,
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Iterative methods timed against the direct solve.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// The large grid (n = 3000, p up to 1000, 1000 trials); other flags
    /// still override it.
    #[arg(long)]
    pub full: bool,
    /// Run trials one at a time for cleaner timings.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl BenchArgs {
    pub fn config(&self) -> BenchConfig {
        let mut cfg = if self.full { BenchConfig::full() } else { BenchConfig::default() };
        if !self.mode.is_empty() {
            cfg.modes = self.mode.clone();
        }
        if let Some(p) = &self.p_grid {
            cfg.p_grid = p.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.parallel = !self.sequential;
        cfg
    }
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    let cfg = args.config();
    let rows = run_benchmark(&cfg)?;
    let cells = summarize(&rows);

    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("bench", Some(cfg.seed));
    manifest
        .flag("full", args.full)
        .flag("n", cfg.n)
        .flag("p_grid", cfg.p_grid.clone())
        .flag("trials", cfg.trials)
        .flag("modes", cfg.modes.iter().map(|m| m.name()).collect::<Vec<_>>())
        .flag("methods", cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>())
        .flag("sigma", cfg.sigma)
        .flag("pool_factor", cfg.pool_factor)
        .flag("dep_rho", cfg.dep_rho)
        .flag("sequential", args.sequential);

    let (path, file) = create(&args.out, "bench_results.csv")?;
    write_bench_results(file, &rows)?;
    manifest.output(&path);
    let (path, file) = create(&args.out, "error_dist.csv")?;
    write_error_dist(file, &rows)?;
    manifest.output(&path);
    let (path, file) = create(&args.out, "bench_summary.csv")?;
    write_bench_summary(file, &cells)?;
    manifest.output(&path);
    manifest.write(&args.out)?;

    for c in &cells {
        eprintln!(
            "{:<4} p={:<5} {:<9} failures {:>4}/{:<5} median {:.3e} s",
            c.mode.name(),
            c.p,
            c.method.name(),
            c.failures,
            c.trials,
            c.median_wall_time
        );
    }
    Ok(ExitCode::SUCCESS)
}
