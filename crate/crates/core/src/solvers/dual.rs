use super::SolverError;
use crate::linalg::{cholesky, DenseMatrix, LinalgError};

/// Ridge solution through the `n × n` dual system:
/// `(XᵗX + σ_β⁻²I)⁻¹Xᵗy = Xᵗ(XXᵗ + σ_β⁻²I)⁻¹y`.
///
/// Cheaper than the primal system when `n ≤ p`.
pub fn solve_dual(x: &DenseMatrix, sigma_beta: f64, y: &[f64]) -> Result<Vec<f64>, SolverError> {
    if y.len() != x.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        }
        .into());
    }
    if !(sigma_beta > 0.0) {
        return Err(SolverError::InvalidOptions(format!(
            "sigma_beta must be positive, got {sigma_beta}"
        )));
    }
    let n = x.rows();
    let penalty = sigma_beta.powi(-2);
    let mut k = DenseMatrix::zeros(n, n);
    for c in 0..x.cols() {
        let col = x.col(c);
        for j in 0..n {
            let xj = col[j];
            if xj == 0.0 {
                continue;
            }
            let dst = k.col_mut(j);
            for (d, &xi) in dst.iter_mut().zip(col) {
                *d += xi * xj;
            }
        }
    }
    k.add_diag(&vec![penalty; n]);
    let g = cholesky(&k)?;
    let alpha = g.solve_upper(&g.solve_lower_transpose(y)?)?;
    Ok(x.tr_mul_vec(&alpha))
}
