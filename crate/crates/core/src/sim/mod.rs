//! Synthetic data, the solver benchmark and evaluation metrics.

mod bench;
mod design;
mod metrics;
mod pheno;
mod report;

use thiserror::Error;

pub use bench::{run_benchmark, summarize, BenchConfig, BenchResult, CellSummary};
pub use design::{gen_design, gen_genotypes, DesignMode, DesignSpec};
pub use metrics::{calibration_bins, mse, rpg, CalibrationBin, CALIBRATION_BINS};
pub use pheno::{pure_noise, simulate_phenotype, PhenoSpec, Phenotype};
pub use report::{write_bench_results, write_bench_summary, write_calibration, write_error_dist};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("the simulated genetic signal is numerically zero")]
    ZeroSignal,
    #[error("X β_true is zero, so the prediction gain is undefined")]
    DegenerateDenominator,
    #[error("length mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
