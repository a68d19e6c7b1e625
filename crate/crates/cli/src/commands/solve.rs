use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use icf_bvsr::linalg::PenaltyDiag;
use icf_bvsr::solvers::{Method, PenalizedSystem, SolverOptions};

use super::{create, ensure_dir};
use crate::io::{read_matrix, read_vector};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Comma-separated design matrix X, one sample per row.
    pub matrix: PathBuf,
    /// Right-hand side z, one value per line or a single row.
    pub z: Option<PathBuf>,
    /// Treat the matrix file as XᵗX instead of X.
    #[arg(long)]
    pub gram: bool,
    /// Use z = 0.
    #[arg(long, conflicts_with_all = ["z", "response"])]
    pub null_z: bool,
    /// Use z = Xᵗy with y read from this file.
    #[arg(long, conflicts_with = "z")]
    pub response: Option<PathBuf>,
    /// Diagonal of Σ: one value for all coordinates or a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value = "icf")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Relaxation used by SOR.
    #[arg(long, default_value_t = 1.2)]
    pub omega_sor: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: &SolveArgs) -> Result<ExitCode> {
    let m = read_matrix(&args.matrix)?;
    let gram = if args.gram {
        if !m.is_square() {
            bail!("{}: a Gram matrix must be square, got {}x{}", args.matrix.display(), m.rows(), m.cols());
        }
        if args.response.is_some() {
            bail!("--response needs the design matrix, not --gram");
        }
        m.clone()
    } else {
        m.gram()
    };
    let p = gram.cols();
    let z = match (&args.z, &args.response, args.null_z) {
        (Some(path), _, _) => read_vector(path)?,
        (None, Some(path), _) => {
            let y = read_vector(path)?;
            if y.len() != m.rows() {
                bail!("{}: {} values for a design with {} rows", path.display(), y.len(), m.rows());
            }
            m.tr_mul_vec(&y)
        }
        (None, None, true) => vec![0.0; p],
        (None, None, false) => bail!("give a z file, --response or --null-z"),
    };
    if z.len() != p {
        bail!("z has {} entries but the system has dimension {p}", z.len());
    }
    let sigma = match args.sigma.as_slice() {
        [s] => vec![*s; p],
        s if s.len() == p => s.to_vec(),
        s => bail!("--sigma has {} values for dimension {p}", s.len()),
    };

    let sys = PenalizedSystem::from_gram(&gram, PenaltyDiag::new(sigma.clone())?, z)?;
    let opts = SolverOptions {
        tolerance: args.tolerance,
        max_iter: args.max_iter,
        omega_sor: args.omega_sor,
        initial_beta: None,
    };
    let report = args.method.solve(&sys, &opts)?;

    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("solve", None);
    manifest
        .flag("method", args.method.name())
        .flag("gram", args.gram)
        .flag("null_z", args.null_z)
        .flag("sigma", sigma)
        .flag("tolerance", args.tolerance)
        .flag("max_iter", args.max_iter)
        .flag("omega_sor", args.omega_sor);
    manifest.input(&args.matrix)?;
    for path in args.z.iter().chain(&args.response) {
        manifest.input(path)?;
    }

    let (path, file) = create(&args.out, "solution.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["index", "beta"])?;
    for (j, b) in report.beta.iter().enumerate() {
        w.write_record([j.to_string(), b.to_string()])?;
    }
    w.flush()?;
    manifest.output(&path);

    let final_omega = report.omega_trace.last().map(|w| w.to_string()).unwrap_or_default();
    let rho_hat = report.rho_hat.map(|r| r.to_string()).unwrap_or_default();
    let (path, file) = create(&args.out, "report.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "method",
        "dim",
        "iterations",
        "converged",
        "max_step",
        "wall_time_s",
        "rho_hat",
        "final_omega",
        "residual_inf",
    ])?;
    w.write_record([
        args.method.name().to_string(),
        p.to_string(),
        report.iterations.to_string(),
        report.converged.to_string(),
        report.max_step.to_string(),
        report.wall_time.as_secs_f64().to_string(),
        rho_hat,
        final_omega,
        sys.residual_inf(&report.beta).to_string(),
    ])?;
    w.flush()?;
    manifest.output(&path);
    manifest.note("converged", report.converged).note("iterations", report.iterations);
    manifest.write(&args.out)?;

    let mut stdout = std::io::stdout().lock();
    for b in &report.beta {
        writeln!(stdout, "{b}")?;
    }
    eprintln!(
        "{}: {} iterations, converged = {}, max step {:e}",
        args.method.name(),
        report.iterations,
        report.converged,
        report.max_step
    );
    Ok(if report.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
