use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use icf_bvsr::sim::{calibration_bins, write_calibration};

use super::{create, ensure_dir};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PipColumn {
    Raw,
    Rb,
}

impl PipColumn {
    fn header(self) -> &'static str {
        match self {
            PipColumn::Raw => "raw_pip",
            PipColumn::Rb => "rb_pip",
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// `pip.csv` files from `fit`.
    #[arg(long = "pip", required = true)]
    pub pips: Vec<PathBuf>,
    /// `truth.csv` files from `simulate`, paired with `--pip` in order.
    #[arg(long = "truth", required = true)]
    pub truths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = PipColumn::Raw)]
    pub column: PipColumn,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Values of the named column keyed by the `index` column.
fn read_column(path: &Path, name: &str) -> Result<Vec<(usize, String)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let find = |h: &str| {
        headers
            .iter()
            .position(|x| x == h)
            .ok_or_else(|| anyhow!("{}: no `{h}` column", path.display()))
    };
    let (ix, col) = (find("index")?, find(name)?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let index = record[ix]
            .trim()
            .parse()
            .map_err(|_| anyhow!("{}: line {line}: bad index `{}`", path.display(), &record[ix]))?;
        out.push((index, record[col].trim().to_string()));
    }
    out.sort_by_key(|(i, _)| *i);
    if out.iter().enumerate().any(|(k, (i, _))| k != *i) {
        bail!("{}: indices must run 0, 1, 2, ... without gaps", path.display());
    }
    Ok(out)
}

pub fn run(args: &CalibrateArgs) -> Result<ExitCode> {
    if args.pips.len() != args.truths.len() {
        bail!("{} --pip files but {} --truth files", args.pips.len(), args.truths.len());
    }
    let mut pips = Vec::new();
    let mut causal = Vec::new();
    let mut manifest = RunManifest::new("calibrate", None);
    manifest.flag("column", args.column.header());
    for (pip_path, truth_path) in args.pips.iter().zip(&args.truths) {
        let p = read_column(pip_path, args.column.header())?;
        let t = read_column(truth_path, "causal")?;
        if p.len() != t.len() {
            bail!(
                "{} has {} covariates but {} has {}",
                pip_path.display(),
                p.len(),
                truth_path.display(),
                t.len()
            );
        }
        for ((_, pv), (_, tv)) in p.iter().zip(&t) {
            pips.push(
                pv.parse::<f64>()
                    .map_err(|_| anyhow!("{}: bad PIP `{pv}`", pip_path.display()))?,
            );
            causal.push(match tv.as_str() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => bail!("{}: bad causal flag `{other}`", truth_path.display()),
            });
        }
        manifest.input(pip_path)?.input(truth_path)?;
    }
    let bins = calibration_bins(&pips, &causal)?;

    ensure_dir(&args.out)?;
    let (path, file) = create(&args.out, "calibration.csv")?;
    write_calibration(file, &bins)?;
    manifest.output(&path);
    let misses = bins
        .iter()
        .filter(|b| b.count > 0 && b.tp_fraction < b.mean_pip - 2.0 * b.se)
        .count();
    let populated = bins.iter().filter(|b| b.count > 0).count();
    manifest
        .note("covariates", pips.len())
        .note("populated_bins", populated)
        .note("anti_conservative_bins", misses);
    manifest.write(&args.out)?;
    eprintln!("{populated} populated bins, {misses} with tp_fraction below mean_pip - 2 se");
    Ok(ExitCode::SUCCESS)
}
