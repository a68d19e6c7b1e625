use std::time::Instant;

use super::{PenalizedSystem, SolverError, SolverReport};
use crate::linalg::cholesky;

/// Exact solve: Cholesky of `A = RᵗR + Σ²` followed by two substitutions.
/// This is the accuracy reference for every iterative method.
pub fn solve_direct(sys: &PenalizedSystem) -> Result<SolverReport, SolverError> {
    let a = sys.a();
    let start = Instant::now();
    let g = cholesky(a)?;
    let y = g.solve_lower_transpose(sys.z())?;
    let beta = g.solve_upper(&y)?;
    Ok(SolverReport {
        beta,
        iterations: 0,
        converged: true,
        max_step: 0.0,
        omega_trace: Vec::new(),
        rho_hat: None,
        wall_time: start.elapsed(),
    })
}
