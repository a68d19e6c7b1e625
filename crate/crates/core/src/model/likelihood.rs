use std::cell::Cell;

use super::{Dataset, ModelError, ModelState};
use crate::linalg::{cholesky, dot};

thread_local! {
    static LOG_Z_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`log_z`] evaluations made on the current thread so far.
pub fn log_z_calls() -> u64 {
    LOG_Z_CALLS.with(Cell::get)
}

/// `log L = −(n/2) log(y_ss − xtyᵗβ̂)` with `β̂ = Ω⁻¹ xty`.
///
/// For the empty model pass empty slices.
pub fn log_l(n: usize, y_ss: f64, xty: &[f64], beta_hat: &[f64]) -> Result<f64, ModelError> {
    let resid = y_ss - dot(xty, beta_hat);
    if !(resid > 0.0) {
        return Err(ModelError::NonPositiveResidual(resid));
    }
    Ok(-0.5 * n as f64 * resid.ln())
}

/// `log Z = −½ log|Ω| − (|γ|/2) log σ_β²`, from a fresh factorization of
/// `Ω`. Zero for the empty model.
pub fn log_z(state: &ModelState) -> Result<f64, ModelError> {
    LOG_Z_CALLS.with(|c| c.set(c.get() + 1));
    if state.is_empty() {
        return Ok(0.0);
    }
    let sb2 = state.sigma_beta_sq()?;
    let mut omega = state.r().gram();
    omega.add_diag(&vec![sb2.recip(); state.size()]);
    let g = cholesky(&omega)?;
    Ok(-0.5 * g.log_det_gram() - 0.5 * state.size() as f64 * sb2.ln())
}

/// `Ω⁻¹X_γᵗy` by a dense Cholesky solve, in factor order.
pub fn posterior_mean_beta(state: &ModelState) -> Result<Vec<f64>, ModelError> {
    if state.is_empty() {
        return Ok(Vec::new());
    }
    let sb2 = state.sigma_beta_sq()?;
    let mut omega = state.r().gram();
    omega.add_diag(&vec![sb2.recip(); state.size()]);
    let g = cholesky(&omega)?;
    Ok(g.solve_upper(&g.solve_lower_transpose(state.xty())?)?)
}

/// Log Bayes factor against the null model,
/// `−½ log|I + σ_β²X_γᵗX_γ| − (n/2) log(1 − yᵗX_γβ̂ / y_ss)`.
pub fn log_bayes_factor(state: &ModelState, data: &Dataset) -> Result<f64, ModelError> {
    if state.is_empty() {
        return Ok(0.0);
    }
    let beta = posterior_mean_beta(state)?;
    let n = data.n();
    Ok(log_z(state)? + log_l(n, data.y_ss(), state.xty(), &beta)? + 0.5 * n as f64 * data.y_ss().ln())
}
