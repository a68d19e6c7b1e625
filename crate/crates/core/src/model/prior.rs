use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use super::ModelError;

/// Hyperparameters of the sparsity and heritability priors.
///
/// `log π ~ Unif(log pi_min, log pi_max)` unless `use_improper_pi` is set, in
/// which case the limit `P(γ) ∝ Γ(|γ|)Γ(N + 1 − |γ|)` is used and the empty
/// model has no prior mass. `h ~ Unif(h_min, h_max)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperpriors {
    pub pi_min: f64,
    pub pi_max: f64,
    pub use_improper_pi: bool,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for Hyperpriors {
    fn default() -> Self {
        Self {
            pi_min: 1e-4,
            pi_max: 1e-2,
            use_improper_pi: false,
            h_min: 0.0,
            h_max: 1.0,
        }
    }
}

impl Hyperpriors {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.pi_min > 0.0 && self.pi_min < self.pi_max && self.pi_max <= 1.0) {
            return Err(ModelError::Domain(format!(
                "need 0 < pi_min < pi_max <= 1, got [{}, {}]",
                self.pi_min, self.pi_max
            )));
        }
        if !(self.h_min >= 0.0 && self.h_min < self.h_max && self.h_max <= 1.0) {
            return Err(ModelError::Domain(format!(
                "need 0 <= h_min < h_max <= 1, got [{}, {}]",
                self.h_min, self.h_max
            )));
        }
        Ok(())
    }

    /// Smallest model size with positive prior mass.
    pub fn min_model_size(&self) -> usize {
        usize::from(self.use_improper_pi)
    }

    pub fn h_in_support(&self, h: f64) -> bool {
        h > self.h_min.max(0.0) && h < self.h_max.min(1.0)
    }
}

/// `σ_β² = h / ((1 − h) Σ_{j∈γ} s_j)`.
pub fn sigma_beta_sq(gamma: &[usize], h: f64, s: &[f64]) -> Result<f64, ModelError> {
    if gamma.is_empty() {
        return Err(ModelError::EmptyModel);
    }
    sigma_beta_sq_from_sum(h, gamma.iter().map(|&j| s[j]).sum())
}

pub fn sigma_beta_sq_from_sum(h: f64, s_sum: f64) -> Result<f64, ModelError> {
    if !(h > 0.0 && h < 1.0) {
        return Err(ModelError::HOutOfRange(h));
    }
    if !(s_sum > 0.0) || !s_sum.is_finite() {
        return Err(ModelError::Domain(format!("variance sum must be positive, got {s_sum}")));
    }
    Ok(h / ((1.0 - h) * s_sum))
}

/// Log prior mass of one particular model with `k` of `n_cov` covariates.
///
/// Truncated mode integrates `π^{k−1}(1 − π)^{N−k}` over `[pi_min, pi_max]`
/// and divides by `log(pi_max / pi_min)`, so the masses over all `2^N`
/// models sum to one. Improper mode returns `lnΓ(k) + lnΓ(N + 1 − k)`,
/// defined only up to a constant and only for `k ≥ 1`.
pub fn log_prior_gamma(k: usize, n_cov: usize, hp: &Hyperpriors) -> Result<f64, ModelError> {
    if k > n_cov {
        return Err(ModelError::Domain(format!("model size {k} exceeds {n_cov} covariates")));
    }
    if hp.use_improper_pi {
        if k == 0 {
            return Err(ModelError::Domain(
                "the improper sparsity prior puts no mass on the empty model".into(),
            ));
        }
        return Ok(ln_gamma(k as f64) + ln_gamma((n_cov + 1 - k) as f64));
    }
    hp.validate()?;
    Ok(log_truncated_integral(k, n_cov, hp.pi_min, hp.pi_max) - (hp.pi_max / hp.pi_min).ln().ln())
}

/// `log ∫_a^b π^{k−1}(1 − π)^{N−k} dπ`.
pub(crate) fn log_truncated_integral(k: usize, n_cov: usize, a: f64, b: f64) -> f64 {
    if k >= 1 {
        let alpha = k as f64;
        let beta = (n_cov - k + 1) as f64;
        let ia = beta_reg(alpha, beta, a);
        let ib = beta_reg(alpha, beta, b);
        // Take the difference on whichever tail keeps it well conditioned.
        let (diff, scale) = if ia > 0.5 {
            let ca = beta_reg(beta, alpha, 1.0 - a);
            let cb = beta_reg(beta, alpha, 1.0 - b);
            (ca - cb, ca)
        } else {
            (ib - ia, ib)
        };
        if diff > 1e-6 * scale && diff > 1e-280 {
            return ln_beta(alpha, beta) + diff.ln();
        }
    }
    log_integral_quadrature(k, n_cov, a, b)
}

/// Composite Simpson in `t = log π`, accumulated in log space. The
/// integrand `exp(kt + (N − k) log(1 − eᵗ))` is log-concave, so a mesh fine
/// against its steepest slope is enough.
fn log_integral_quadrature(k: usize, n_cov: usize, a: f64, b: f64) -> f64 {
    let (lo, hi) = (a.ln(), b.ln());
    let width = hi - lo;
    let rest = (n_cov - k) as f64;
    let slope = k as f64 + rest * b / (1.0 - b).max(1e-300);
    let mut m = ((width * slope * 40.0).ceil() as usize).clamp(2000, 2_000_000);
    m += m % 2;
    let step = width / m as f64;
    let g = |t: f64| k as f64 * t + rest * (-t.exp()).ln_1p();
    let terms: Vec<f64> = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            g(lo + i as f64 * step) + f64::ln(w)
        })
        .collect();
    log_sum_exp(&terms) + (step / 3.0).ln()
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
