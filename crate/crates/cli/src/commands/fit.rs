use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use icf_bvsr::mcmc::{run_chain, ChainConfig, ChainOutput};
use icf_bvsr::model::{Dataset, Hyperpriors};
use rayon::prelude::*;

use super::{create, ensure_dir};
use crate::io::{read_genotypes, read_phenotype};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Whitespace-separated dosages, one sample per line.
    pub genotypes: PathBuf,
    /// One phenotype value per line.
    pub phenotype: PathBuf,
    #[arg(long, default_value_t = 2_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1_000)]
    pub rb_interval: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub pi_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub pi_max: f64,
    /// Chain `c` (from 0) uses seed `seed + c`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn write_pip(dir: &Path, name: &str, out: &ChainOutput) -> Result<PathBuf> {
    let (path, file) = create(dir, name)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["index", "raw_pip", "rb_pip"])?;
    for (j, (raw, rb)) in out.pip_raw().iter().zip(out.pip_rb()).enumerate() {
        w.write_record([j.to_string(), raw.to_string(), rb.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

fn write_beta(dir: &Path, out: &ChainOutput) -> Result<PathBuf> {
    let (path, file) = create(dir, "beta.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["index", "rb_beta", "raw_beta"])?;
    for (j, (rb, raw)) in out.beta_rb().iter().zip(out.beta_raw()).enumerate() {
        w.write_record([j.to_string(), rb.to_string(), raw.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

/// One row per recorded step and chain; `pi` and `tau` are filled on the
/// steps where they were drawn.
fn write_hyper(dir: &Path, runs: &[ChainOutput]) -> Result<PathBuf> {
    let (path, file) = create(dir, "hyper.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["chain", "record", "h", "pve", "model_size", "pi", "tau"])?;
    for (c, out) in runs.iter().enumerate() {
        let mut draws = out
            .pi_tau_records
            .iter()
            .zip(out.pi_samples.iter().zip(&out.tau_samples))
            .peekable();
        for (t, ((h, pve), size)) in out
            .h_samples
            .iter()
            .zip(&out.heritability_samples)
            .zip(&out.size_samples)
            .enumerate()
        {
            let (pi, tau) = match draws.peek() {
                Some((&r, (pi, tau))) if r == t as u64 => {
                    let cells = (pi.to_string(), tau.to_string());
                    draws.next();
                    cells
                }
                _ => (String::new(), String::new()),
            };
            w.write_record([
                (c + 1).to_string(),
                t.to_string(),
                h.to_string(),
                pve.to_string(),
                size.to_string(),
                pi,
                tau,
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// Posterior means per run with a pooled `combined` column.
fn write_summary(dir: &Path, runs: &[ChainOutput], combined: &ChainOutput) -> Result<PathBuf> {
    let (path, file) = create(dir, "summary.csv")?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["parameter".to_string(), "combined".to_string()];
    header.extend((1..=runs.len()).map(|c| format!("run{c}")));
    w.write_record(&header)?;
    let stats: [(&str, fn(&ChainOutput) -> f64); 6] = [
        ("h", |o| o.mean_h()),
        ("pve", |o| o.mean_heritability()),
        ("model_size", |o| o.mean_size()),
        ("pi", |o| mean(o.pi_samples.iter().copied())),
        ("tau", |o| mean(o.tau_samples.iter().copied())),
        ("acceptance_rate", |o| o.acceptance_rate()),
    ];
    for (name, f) in stats {
        let mut row = vec![name.to_string(), f(combined).to_string()];
        row.extend(runs.iter().map(|o| f(o).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn run(args: &FitArgs) -> Result<ExitCode> {
    if args.chains == 0 {
        bail!("--chains must be at least 1");
    }
    let geno = read_genotypes(&args.genotypes)?;
    let y = read_phenotype(&args.phenotype)?;
    if y.len() != geno.x.rows() {
        bail!(
            "{} has {} values but {} has {} samples",
            args.phenotype.display(),
            y.len(),
            args.genotypes.display(),
            geno.x.rows()
        );
    }
    let data = Dataset::new(geno.x, y)?;
    let base = ChainConfig {
        burn_in: args.burn_in,
        sampling_steps: args.steps,
        rb_interval: args.rb_interval,
        hyperpriors: Hyperpriors {
            pi_min: args.pi_min,
            pi_max: args.pi_max,
            ..Default::default()
        },
        ..Default::default()
    };
    base.validate()?;
    let runs: Vec<ChainOutput> = (0..args.chains)
        .into_par_iter()
        .map(|c| {
            let cfg = ChainConfig {
                seed: args.seed.wrapping_add(c as u64),
                ..base.clone()
            };
            run_chain(&data, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let mut combined = runs[0].clone();
    for r in &runs[1..] {
        combined.merge(r)?;
    }

    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("fit", Some(args.seed));
    manifest
        .flag("burn_in", args.burn_in)
        .flag("steps", args.steps)
        .flag("rb_interval", args.rb_interval)
        .flag("pi_min", args.pi_min)
        .flag("pi_max", args.pi_max)
        .flag("chains", args.chains);
    manifest.input(&args.genotypes)?.input(&args.phenotype)?;
    manifest
        .note("samples", data.n())
        .note("covariates", data.n_covariates())
        .note("missing_imputed", geno.missing)
        .note("max_drift", combined.max_drift())
        .note("icf_mean_iterations", combined.icf.mean_iterations())
        .note("icf_direct_fallbacks", combined.icf.direct_fallbacks)
        .note("numerical_rejections", combined.numerical_rejections);
    if let Some(names) = geno.names {
        manifest.note("covariate_names", names);
    }

    manifest.output(&write_pip(&args.out, "pip.csv", &combined)?);
    if runs.len() > 1 {
        for (c, r) in runs.iter().enumerate() {
            manifest.output(&write_pip(&args.out, &format!("pip_run{}.csv", c + 1), r)?);
        }
    }
    manifest.output(&write_beta(&args.out, &combined)?);
    manifest.output(&write_hyper(&args.out, &runs)?);
    manifest.output(&write_summary(&args.out, &runs, &combined)?);
    manifest.write(&args.out)?;

    eprintln!(
        "{} chain(s): mean h {:.3}, mean model size {:.1}, acceptance {:.3}",
        runs.len(),
        combined.mean_h(),
        combined.mean_size(),
        combined.acceptance_rate()
    );
    Ok(ExitCode::SUCCESS)
}
