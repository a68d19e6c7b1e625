//! Jacobi, Gauss-Seidel and SOR on the splitting `A = L + D + U`.
//!
//! `A` is symmetric and column-major, so row `i` of the strict upper part is
//! read as column `i` and every sweep is a contiguous scan.

use std::time::Instant;

use super::{PenalizedSystem, SolverError, SolverOptions, SolverReport, StepMonitor, StepOutcome};
use crate::linalg::{dot, DenseMatrix};

/// `A = L + D + U` with `L` (`U`) strictly lower (upper) and `D` diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSplitting {
    pub lower: DenseMatrix,
    pub diag: Vec<f64>,
    pub upper: DenseMatrix,
}

impl MatrixSplitting {
    pub fn new(a: &DenseMatrix) -> Self {
        let n = a.rows();
        Self {
            lower: DenseMatrix::from_fn(n, n, |i, j| if i > j { a[(i, j)] } else { 0.0 }),
            diag: (0..n).map(|i| a[(i, i)]).collect(),
            upper: DenseMatrix::from_fn(n, n, |i, j| if i < j { a[(i, j)] } else { 0.0 }),
        }
    }

    pub fn recombine(&self) -> DenseMatrix {
        let n = self.diag.len();
        DenseMatrix::from_fn(n, n, |i, j| {
            self.lower[(i, j)] + self.upper[(i, j)] + if i == j { self.diag[i] } else { 0.0 }
        })
    }
}

#[derive(Clone, Copy)]
enum Sweep {
    Jacobi,
    Relaxed(f64),
}

fn run(sys: &PenalizedSystem, opts: &SolverOptions, sweep: Sweep) -> Result<SolverReport, SolverError> {
    let p = sys.dim();
    opts.validate(p)?;
    if let Sweep::Relaxed(w) = sweep {
        if !(w > 0.0 && w < 2.0) {
            return Err(SolverError::InvalidOptions(format!("omega_sor must lie in (0, 2), got {w}")));
        }
    }
    let a = sys.a();
    let z = sys.z();
    let start = Instant::now();
    let mut beta = opts.start(p);
    let mut prev = beta.clone();
    let mut monitor = StepMonitor::new(opts.tolerance);
    let mut iterations = 0;
    let mut converged = p == 0;
    let mut max_step = 0.0;

    while !converged && iterations < opts.max_iter {
        prev.copy_from_slice(&beta);
        match sweep {
            Sweep::Jacobi => {
                for i in 0..p {
                    let row = a.col(i);
                    let off = dot(row, &prev) - row[i] * prev[i];
                    beta[i] = (z[i] - off) / row[i];
                }
            }
            Sweep::Relaxed(w) => {
                for i in 0..p {
                    let row = a.col(i);
                    let off = dot(row, &beta) - row[i] * beta[i];
                    let gs = (z[i] - off) / row[i];
                    beta[i] = (1.0 - w) * beta[i] + w * gs;
                }
            }
        }
        iterations += 1;
        max_step = crate::linalg::max_abs_diff(&beta, &prev);
        match monitor.observe(max_step) {
            StepOutcome::Converged => converged = true,
            StepOutcome::Abort => break,
            StepOutcome::Continue => {}
        }
    }

    Ok(SolverReport {
        beta,
        iterations,
        converged,
        max_step,
        omega_trace: Vec::new(),
        rho_hat: None,
        wall_time: start.elapsed(),
    })
}

pub fn solve_jacobi(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    run(sys, opts, Sweep::Jacobi)
}

pub fn solve_gauss_seidel(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    run(sys, opts, Sweep::Relaxed(1.0))
}

pub fn solve_sor(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    run(sys, opts, Sweep::Relaxed(opts.omega_sor))
}
