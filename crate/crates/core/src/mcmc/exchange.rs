//! Synthetic responses and the exchange-algorithm acceptance ratio.

use rand::Rng;
use rand_distr::StandardNormal;

use super::SystemSolver;
use crate::model::{log_l, log_prior_gamma, Dataset, Hyperpriors, ModelError, ModelState};
use crate::solvers::SolverOptions;

/// `ỹ = X_γβ̃ + ε̃` with `β̃ ~ N(0, σ_β² I)` and `ε̃ ~ N(0, I)`.
pub fn sample_synthetic_y<R: Rng + ?Sized>(
    state: &ModelState,
    data: &Dataset,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    let mut y: Vec<f64> = (0..data.n()).map(|_| rng.sample(StandardNormal)).collect();
    if state.is_empty() {
        return Ok(y);
    }
    let sd = state.sigma_beta_sq()?.sqrt();
    let beta: Vec<f64> = (0..state.size())
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    for (yi, xb) in y.iter_mut().zip(data.x_sub_mul(state.order(), &beta)) {
        *yi += xb;
    }
    Ok(y)
}

/// Centered sum of squares `vᵗv − n v̄²`.
pub(crate) fn centered_ss(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// The four pieces of `log α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRatioTerms {
    /// `log K(θ | θ′) − log K(θ′ | θ)`.
    pub kernel: f64,
    /// `log L(ỹ; θ) − log L(ỹ; θ′)`.
    pub synthetic: f64,
    /// `log L(y; θ′) − log L(y; θ)`.
    pub observed: f64,
    /// `log P(γ′) − log P(γ)`; the `h` prior is flat on its support.
    pub prior: f64,
}

impl LogRatioTerms {
    pub fn total(&self) -> f64 {
        self.kernel + self.synthetic + self.observed + self.prior
    }
}

/// `log L` of `state` for a response given through its cross-products.
pub(crate) fn log_l_for(
    solver: &mut SystemSolver,
    state: &ModelState,
    n: usize,
    z_ss: f64,
    xtz: &[f64],
    warm: Option<Vec<f64>>,
) -> Result<(f64, Vec<f64>), ModelError> {
    let beta = solver.solve(state, xtz, warm)?;
    Ok((log_l(n, z_ss, xtz, &beta)?, beta))
}

/// `log α` for moving from `current` to `proposed` given a synthetic
/// response drawn under `proposed`. Each of the four likelihood terms costs
/// one penalized solve; no determinant is evaluated. Any numerical failure
/// yields `−∞`.
pub fn exchange_accept_log_ratio(
    current: &ModelState,
    proposed: &ModelState,
    data: &Dataset,
    y_tilde: &[f64],
    log_kernel_ratio: f64,
    hp: &Hyperpriors,
    opts: &SolverOptions,
) -> f64 {
    let mut solver = SystemSolver::new(opts.clone());
    let terms = (|| -> Result<LogRatioTerms, ModelError> {
        let n = data.n();
        let ss = centered_ss(y_tilde);
        let (lt_cur, _) = log_l_for(&mut solver, current, n, ss, &data.xt_sub(current.order(), y_tilde), None)?;
        let (lt_prop, _) =
            log_l_for(&mut solver, proposed, n, ss, &data.xt_sub(proposed.order(), y_tilde), None)?;
        let (ly_cur, _) = log_l_for(&mut solver, current, n, data.y_ss(), current.xty(), None)?;
        let (ly_prop, _) = log_l_for(&mut solver, proposed, n, data.y_ss(), proposed.xty(), None)?;
        let ncov = data.n_covariates();
        Ok(LogRatioTerms {
            kernel: log_kernel_ratio,
            synthetic: lt_cur - lt_prop,
            observed: ly_prop - ly_cur,
            prior: log_prior_gamma(proposed.size(), ncov, hp)? - log_prior_gamma(current.size(), ncov, hp)?,
        })
    })();
    terms.map(|t| t.total()).unwrap_or(f64::NEG_INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = DenseMatrix::from_fn(60, 4, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..60).map(|i| x[(i, 0)] + rng.random_range(-1.0..1.0)).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn identical_states_give_zero() {
        let d = data();
        let st = ModelState::new(&d, &[0, 2], 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let yt = sample_synthetic_y(&st, &d, &mut rng).unwrap();
        let hp = Hyperpriors { pi_min: 0.1, pi_max: 0.9, ..Default::default() };
        let la = exchange_accept_log_ratio(&st, &st, &d, &yt, 0.0, &hp, &SolverOptions::default());
        assert!(la.abs() < 1e-9);
    }

    #[test]
    fn empty_model_draws_unit_noise() {
        let d = data();
        let st = ModelState::empty(&d, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = 0.0;
        let reps = 400;
        for _ in 0..reps {
            let y = sample_synthetic_y(&st, &d, &mut rng).unwrap();
            acc += y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        }
        assert!((acc / reps as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn synthetic_variance_matches_analytic() {
        // Var(ỹ_i) = 1 + σ_β² Σ_{j∈γ} x_ij²
        let d = data();
        let st = ModelState::new(&d, &[1, 3], 0.7).unwrap();
        let sb2 = st.sigma_beta_sq().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 20_000;
        let mut sumsq = vec![0.0; d.n()];
        for _ in 0..reps {
            for (s, v) in sumsq.iter_mut().zip(sample_synthetic_y(&st, &d, &mut rng).unwrap()) {
                *s += v * v;
            }
        }
        for i in 0..d.n() {
            let want = 1.0 + sb2 * (d.x()[(i, 1)].powi(2) + d.x()[(i, 3)].powi(2));
            let got = sumsq[i] / reps as f64;
            // standard error of a variance estimate is about want·√(2/reps)
            assert!((got - want).abs() < 5.0 * want * (2.0 / reps as f64).sqrt(), "row {i}");
        }
    }

    #[test]
    fn term_isolation_with_equal_fits() {
        // flat prior across equal sizes, symmetric kernel, same L(y, ·):
        // swapping two covariates whose columns are identical up to sign
        let base = DenseMatrix::from_fn(30, 1, |i, _| ((i * 7 % 11) as f64) - 5.0);
        let x = DenseMatrix::from_fn(30, 2, |i, j| if j == 0 { base[(i, 0)] } else { -base[(i, 0)] });
        let y: Vec<f64> = (0..30).map(|i| 0.3 * base[(i, 0)] + ((i * 13 % 7) as f64)).collect();
        let d = Dataset::new(x, y).unwrap();
        let a = ModelState::new(&d, &[0], 0.5).unwrap();
        let b = ModelState::new(&d, &[1], 0.5).unwrap();
        let hp = Hyperpriors { pi_min: 0.1, pi_max: 0.9, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let yt = sample_synthetic_y(&b, &d, &mut rng).unwrap();
        let opts = SolverOptions { tolerance: 1e-12, ..Default::default() };
        let la = exchange_accept_log_ratio(&a, &b, &d, &yt, 0.0, &hp, &opts);
        let mut solver = SystemSolver::new(opts);
        let ss = centered_ss(&yt);
        let (la_t, _) = log_l_for(&mut solver, &a, 30, ss, &d.xt_sub(&[0], &yt), None).unwrap();
        let (lb_t, _) = log_l_for(&mut solver, &b, 30, ss, &d.xt_sub(&[1], &yt), None).unwrap();
        assert!((la - (la_t - lb_t)).abs() < 1e-9);
    }

    #[test]
    fn terms_sum() {
        let t = LogRatioTerms { kernel: 0.5, synthetic: -1.0, observed: 2.0, prior: -0.25 };
        assert_eq!(t.total(), 1.25);
    }
}
