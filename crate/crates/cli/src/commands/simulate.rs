use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use icf_bvsr::model::center_columns;
use icf_bvsr::sim::{gen_genotypes, simulate_phenotype, DesignMode, DesignSpec, PhenoSpec};

use super::{create, ensure_dir};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub p: usize,
    #[arg(long, default_value_t = 20)]
    pub n_causal: usize,
    /// Target heritability in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    #[arg(long, default_value = "ind")]
    pub mode: DesignMode,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Writes `genotypes.txt`, `phenotype.txt` and `truth.csv`. The genotype
/// seed is `seed`; the phenotype seed is `seed + 1`.
pub fn run(args: &SimulateArgs) -> Result<ExitCode> {
    let spec = DesignSpec::new(args.n, args.p, args.mode, args.seed);
    let dosages = gen_genotypes(&spec)?;
    let mut x = dosages.clone();
    center_columns(&mut x);
    let pheno = simulate_phenotype(
        &x,
        &PhenoSpec {
            n_causal: args.n_causal,
            h_target: args.h,
            seed: args.seed.wrapping_add(1),
        },
    )?;

    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("simulate", Some(args.seed));
    manifest
        .flag("n", args.n)
        .flag("p", args.p)
        .flag("n_causal", args.n_causal)
        .flag("h", args.h)
        .flag("mode", args.mode.name())
        .flag("dep_rho", spec.dep_rho);

    let (path, mut w) = create(&args.out, "genotypes.txt")?;
    let names: Vec<String> = (0..args.p).map(|j| format!("snp{j}")).collect();
    writeln!(w, "# {}", names.join(" "))?;
    let mut line = String::new();
    for i in 0..args.n {
        line.clear();
        for j in 0..args.p {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&(dosages[(i, j)] as u8).to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    manifest.output(&path);

    let (path, mut w) = create(&args.out, "phenotype.txt")?;
    for v in &pheno.y {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    manifest.output(&path);

    let (path, file) = create(&args.out, "truth.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["index", "beta_true", "causal"])?;
    let mask = pheno.causal_mask();
    for (j, (b, c)) in pheno.beta_true.iter().zip(&mask).enumerate() {
        w.write_record([j.to_string(), b.to_string(), u8::from(*c).to_string()])?;
    }
    w.flush()?;
    manifest.output(&path);
    manifest.note("causal", pheno.gamma_true.clone());
    manifest.write(&args.out)?;
    Ok(ExitCode::SUCCESS)
}
