//! Rao-Blackwellized inclusion probabilities.
//!
//! For each covariate `j` the estimate is the full conditional
//! `P(γ_j = 1 | γ_{−j}, h, y)`. The two competing models differ in size by
//! one, and each gets its own `σ_β²(·, h)`, so the odds are
//!
//! ```text
//! Z(γ₊, h) L(y, γ₊, h) P(γ₊) / [Z(γ₋, h) L(y, γ₋, h) P(γ₋)]
//! ```
//!
//! Since `σ_β²` differs between the two sides, `Ω₊` does not share a
//! factor with `Ω₋`; each side gets its own small Cholesky factorization.

use super::likelihood::log_l;
use super::prior::{log_prior_gamma, sigma_beta_sq_from_sum, Hyperpriors};
use super::{Dataset, ModelError, ModelState};
use crate::linalg::cholesky;

/// Per-covariate output of one Rao-Blackwellization sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RbEstimate {
    /// `P(γ_j = 1 | γ_{−j}, h, y)`.
    pub pip: Vec<f64>,
    /// `P(γ_j = 1 | ·) · E[β_j | γ_j = 1, γ_{−j}, h, y]`.
    pub beta: Vec<f64>,
    /// Covariates whose estimate fell back to the current indicator.
    pub fallbacks: usize,
}

struct Marginal {
    log_m: f64,
    /// Posterior mean of the last covariate listed.
    beta_last: f64,
}

/// `log Z + log L` for the model `gamma` (in the listed order) at `h`.
fn log_marginal(data: &Dataset, gamma: &[usize], h: f64) -> Result<Marginal, ModelError> {
    let n = data.n();
    if gamma.is_empty() {
        return Ok(Marginal {
            log_m: log_l(n, data.y_ss(), &[], &[])?,
            beta_last: 0.0,
        });
    }
    let s_sum: f64 = gamma.iter().map(|&j| data.s()[j]).sum();
    let sb2 = sigma_beta_sq_from_sum(h, s_sum)?;
    let k = gamma.len();
    let mut omega = data.gram_sub(gamma);
    omega.add_diag(&vec![sb2.recip(); k]);
    let g = cholesky(&omega)?;
    let xty: Vec<f64> = gamma.iter().map(|&j| data.xty_all()[j]).collect();
    let w = g.solve_lower_transpose(&xty)?;
    let beta = g.solve_upper(&w)?;
    let log_z = -0.5 * g.log_det_gram() - 0.5 * k as f64 * sb2.ln();
    Ok(Marginal {
        log_m: log_z + log_l(n, data.y_ss(), &xty, &beta)?,
        beta_last: beta[k - 1],
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct Sweep<'a> {
    state: &'a ModelState,
    data: &'a Dataset,
    current: Marginal,
    /// Posterior mean under the current model, in factor order.
    beta_current: Vec<f64>,
    /// Log prior odds of growing from `|γ| − 1` and from `|γ|` covariates.
    odds_keep: Option<f64>,
    odds_grow: Option<f64>,
}

/// `log P(k + 1) − log P(k)`, or `None` when the smaller model has no
/// prior mass.
fn log_prior_odds(k: usize, ncov: usize, hp: &Hyperpriors) -> Result<Option<f64>, ModelError> {
    if k + 1 > ncov {
        return Ok(Some(f64::NEG_INFINITY));
    }
    if hp.use_improper_pi && k == 0 {
        return Ok(None);
    }
    Ok(Some(log_prior_gamma(k + 1, ncov, hp)? - log_prior_gamma(k, ncov, hp)?))
}

impl<'a> Sweep<'a> {
    fn new(state: &'a ModelState, data: &'a Dataset, hp: &'a Hyperpriors) -> Result<Self, ModelError> {
        let current = log_marginal(data, state.order(), state.h())?;
        let beta_current = if state.is_empty() {
            Vec::new()
        } else {
            super::likelihood::posterior_mean_beta(state)?
        };
        let ncov = data.n_covariates();
        let k = state.size();
        let odds_keep = match k {
            0 => Some(f64::NAN),
            _ => log_prior_odds(k - 1, ncov, hp)?,
        };
        let odds_grow = log_prior_odds(k, ncov, hp)?;
        Ok(Self {
            state,
            data,
            current,
            beta_current,
            odds_keep,
            odds_grow,
        })
    }

    /// `(pip, pip · β̂_j)` for covariate `j`.
    fn estimate(&self, j: usize) -> Result<(f64, f64), ModelError> {
        if !self.data.is_usable(j) {
            return Ok((0.0, 0.0));
        }
        let (minus, plus, beta_j, odds) = match self.state.position(j) {
            Some(pos) => {
                let reduced: Vec<usize> = self.state.order().iter().copied().filter(|&i| i != j).collect();
                let minus = log_marginal(self.data, &reduced, self.state.h())?;
                (minus.log_m, self.current.log_m, self.beta_current[pos], self.odds_keep)
            }
            None => {
                let mut grown = self.state.order().to_vec();
                grown.push(j);
                if grown.len() > self.data.max_model_size() {
                    return Ok((0.0, 0.0));
                }
                let plus = log_marginal(self.data, &grown, self.state.h())?;
                (self.current.log_m, plus.log_m, plus.beta_last, self.odds_grow)
            }
        };
        let Some(prior_odds) = odds else {
            return Ok((1.0, beta_j));
        };
        let pip = sigmoid(plus - minus + prior_odds);
        Ok((pip, pip * beta_j))
    }
}

/// `P(γ_j = 1 | γ_{−j}, h, y)` for a single covariate.
pub fn rao_blackwell_pip(
    state: &ModelState,
    data: &Dataset,
    hp: &Hyperpriors,
    j: usize,
) -> Result<f64, ModelError> {
    Ok(Sweep::new(state, data, hp)?.estimate(j)?.0)
}

/// Rao-Blackwellized PIPs for every covariate. Covariates whose estimate
/// fails numerically get the crude indicator `γ_j` and are counted.
pub fn rao_blackwell_all(state: &ModelState, data: &Dataset, hp: &Hyperpriors) -> RbEstimate {
    let ncov = data.n_covariates();
    let crude = |j: usize| if state.contains(j) { 1.0 } else { 0.0 };
    let sweep = match Sweep::new(state, data, hp) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("Rao-Blackwellization failed at the current state: {e}");
            return RbEstimate {
                pip: (0..ncov).map(crude).collect(),
                beta: vec![0.0; ncov],
                fallbacks: ncov,
            };
        }
    };
    let mut out = RbEstimate {
        pip: vec![0.0; ncov],
        beta: vec![0.0; ncov],
        fallbacks: 0,
    };
    for j in 0..ncov {
        match sweep.estimate(j) {
            Ok((p, b)) => {
                out.pip[j] = p;
                out.beta[j] = b;
            }
            Err(e) => {
                log::debug!("covariate {j}: {e}");
                out.pip[j] = crude(j);
                out.fallbacks += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{log_bayes_factor, log_z};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DenseMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * x[(i, 0)] + rng.random_range(-1.0..1.0))
            .collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn marginal_agrees_with_log_z_and_bayes_factor() {
        let d = random_data(1, 30, 5);
        let st = ModelState::new(&d, &[0, 3], 0.4).unwrap();
        let m = log_marginal(&d, st.order(), st.h()).unwrap();
        let bf = log_bayes_factor(&st, &d).unwrap();
        let null = log_marginal(&d, &[], 0.4).unwrap();
        assert!((m.log_m - null.log_m - bf).abs() < 1e-10);
        assert!(log_z(&st).unwrap() < 0.0);
    }

    #[test]
    fn conditional_odds_by_direct_ratio() {
        let d = random_data(2, 40, 6);
        let hp = Hyperpriors { pi_min: 0.05, pi_max: 0.9, ..Default::default() };
        let st = ModelState::new(&d, &[0, 2], 0.5).unwrap();
        for j in 0..6 {
            let mut with: Vec<usize> = st.order().iter().copied().filter(|&i| i != j).collect();
            let without = with.clone();
            with.push(j);
            let bf_with = log_bayes_factor(&ModelState::new(&d, &with, 0.5).unwrap(), &d).unwrap();
            let bf_without = if without.is_empty() {
                0.0
            } else {
                log_bayes_factor(&ModelState::new(&d, &without, 0.5).unwrap(), &d).unwrap()
            };
            let lo = bf_with - bf_without + log_prior_gamma(with.len(), 6, &hp).unwrap()
                - log_prior_gamma(without.len(), 6, &hp).unwrap();
            let want = 1.0 / (1.0 + (-lo).exp());
            let got = rao_blackwell_pip(&st, &d, &hp, j).unwrap();
            assert!((got - want).abs() < 1e-10, "j={j}: {got} vs {want}");
        }
    }

    #[test]
    fn null_covariate_gets_prior_odds() {
        // column 1 is orthogonal to y and to column 0; tiny h makes σ_β² tiny
        let x = DenseMatrix::from_rows(&[[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]).unwrap();
        let d = Dataset::new(x, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let hp = Hyperpriors { pi_min: 0.1, pi_max: 0.5, ..Default::default() };
        let st = ModelState::new(&d, &[0], 1e-9).unwrap();
        let pip = rao_blackwell_pip(&st, &d, &hp, 1).unwrap();
        let lo = log_prior_gamma(2, 2, &hp).unwrap() - log_prior_gamma(1, 2, &hp).unwrap();
        assert!((pip - 1.0 / (1.0 + (-lo).exp())).abs() < 1e-6);
    }

    #[test]
    fn sweep_covers_all_and_respects_bounds() {
        let d = random_data(3, 25, 8);
        let st = ModelState::new(&d, &[0, 4, 5], 0.6).unwrap();
        let rb = rao_blackwell_all(&st, &d, &Hyperpriors::default());
        assert_eq!(rb.fallbacks, 0);
        assert!(rb.pip.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(rb.pip[0] > 0.99);
    }

    #[test]
    fn improper_prior_forces_single_survivor() {
        let d = random_data(4, 20, 3);
        let hp = Hyperpriors { use_improper_pi: true, ..Default::default() };
        let st = ModelState::new(&d, &[1], 0.5).unwrap();
        assert_eq!(rao_blackwell_pip(&st, &d, &hp, 1).unwrap(), 1.0);
    }
}
