//! Diagnostic draws of `π` and `τ`, and the per-iteration heritability.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::beta::beta_reg;

use crate::linalg::dot;
use crate::model::{Dataset, Hyperpriors, ModelError, ModelState};

/// Draw `π | γ` and `τ | γ, h, y`.
///
/// `π` has density proportional to `π^{|γ|−1}(1 − π)^{N−|γ|}` on
/// `[pi_min, pi_max]` (untruncated in improper mode). `τ ~ Gamma(n/2,
/// rate = r/2)` with `r = y_ss − xtyᵗβ̂`.
pub fn gibbs_pi_tau<R: Rng + ?Sized>(
    state: &ModelState,
    data: &Dataset,
    hp: &Hyperpriors,
    beta_hat: &[f64],
    rng: &mut R,
) -> Result<(f64, f64), ModelError> {
    let pi = sample_pi(state.size(), data.n_covariates(), hp, rng)?;
    let resid = data.y_ss() - dot(state.xty(), beta_hat);
    if !(resid > 0.0) {
        return Err(ModelError::NonPositiveResidual(resid));
    }
    let tau = Gamma::new(0.5 * data.n() as f64, 2.0 / resid)
        .map_err(|e| ModelError::Domain(e.to_string()))?
        .sample(rng);
    Ok((pi, tau))
}

fn sample_pi<R: Rng + ?Sized>(k: usize, ncov: usize, hp: &Hyperpriors, rng: &mut R) -> Result<f64, ModelError> {
    let a = k as f64;
    let b = (ncov - k + 1) as f64;
    if hp.use_improper_pi {
        if k == 0 {
            return Err(ModelError::Domain("π has no proper conditional for the empty model".into()));
        }
        return Beta::new(a, b)
            .map(|d| d.sample(rng))
            .map_err(|e| ModelError::Domain(e.to_string()));
    }
    let (lo, hi) = (hp.pi_min, hp.pi_max);
    let u: f64 = rng.random();
    if k >= 1 {
        let (ilo, ihi) = (beta_reg(a, b, lo), beta_reg(a, b, hi));
        if ihi - ilo > 1e-12 {
            let target = ilo + u * (ihi - ilo);
            let (mut l, mut r) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (l + r);
                if beta_reg(a, b, mid) < target {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            return Ok(0.5 * (l + r));
        }
    }
    Ok(grid_inverse_cdf(k, ncov, lo, hi, u))
}

/// Inverse CDF on a fine grid in `t = log π`, for the cases the incomplete
/// beta cannot resolve (including `|γ| = 0`).
fn grid_inverse_cdf(k: usize, ncov: usize, lo: f64, hi: f64, u: f64) -> f64 {
    const POINTS: usize = 4096;
    let (tl, th) = (lo.ln(), hi.ln());
    let step = (th - tl) / (POINTS - 1) as f64;
    let rest = (ncov - k) as f64;
    let logf: Vec<f64> = (0..POINTS)
        .map(|i| {
            let t = tl + i as f64 * step;
            k as f64 * t + rest * (-t.exp()).ln_1p()
        })
        .collect();
    let m = logf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = logf.iter().map(|v| (v - m).exp()).collect();
    let mut cdf = vec![0.0; POINTS];
    for i in 1..POINTS {
        cdf[i] = cdf[i - 1] + 0.5 * (f[i - 1] + f[i]) * step;
    }
    let target = u * cdf[POINTS - 1];
    let i = cdf.partition_point(|&c| c < target).clamp(1, POINTS - 1);
    let frac = if cdf[i] > cdf[i - 1] {
        (target - cdf[i - 1]) / (cdf[i] - cdf[i - 1])
    } else {
        0.0
    };
    (tl + (i as f64 - 1.0 + frac) * step).exp().clamp(lo, hi)
}

/// Proportion of the response variance explained by the fitted
/// `X_γβ̂`, i.e. `‖Rβ̂‖² / y_ss`, clamped to `[0, 1]`.
pub fn heritability_estimate(state: &ModelState, data: &Dataset, beta_hat: &[f64]) -> f64 {
    if state.is_empty() || data.y_ss() <= 0.0 {
        return 0.0;
    }
    let fit = state.r().mul_vec(beta_hat);
    (dot(&fit, &fit) / data.y_ss()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::posterior_mean_beta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, p: usize, signal: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = DenseMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..n)
            .map(|i| signal * x[(i, 0)] + rng.random_range(-1.0..1.0))
            .collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn pi_stays_in_truncation() {
        let hp = Hyperpriors { pi_min: 0.01, pi_max: 0.02, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [0usize, 1, 5, 50] {
            for _ in 0..200 {
                let p = sample_pi(k, 100, &hp, &mut rng).unwrap();
                assert!((0.01..=0.02).contains(&p), "k={k} p={p}");
            }
        }
    }

    #[test]
    fn pi_mean_matches_beta_moment() {
        let hp = Hyperpriors { pi_min: 1e-6, pi_max: 0.999, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 20_000;
        let mean = (0..draws).map(|_| sample_pi(5, 100, &hp, &mut rng).unwrap()).sum::<f64>() / draws as f64;
        // Beta(5, 96): mean 5/101, sd ≈ 0.0215
        assert!((mean - 5.0 / 101.0).abs() < 4.0 * 0.0215 / (draws as f64).sqrt());
    }

    #[test]
    fn empty_model_grid_draws_match_density() {
        // density ∝ (1 − π)^N / π on [a, b]; compare the median with a
        // bisection on the exact CDF (polynomial expansion, small N)
        let (a, b, n) = (0.01f64, 0.5f64, 6usize);
        let cdf = |x: f64| {
            let mut total = (x / a).ln();
            let mut binom = 1.0;
            for i in 1..=n {
                binom = binom * (n - i + 1) as f64 / i as f64;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * binom * (x.powi(i as i32) - a.powi(i as i32)) / i as f64;
            }
            total
        };
        let total = cdf(b);
        let (mut l, mut r) = (a, b);
        for _ in 0..100 {
            let m = 0.5 * (l + r);
            if cdf(m) < 0.5 * total {
                l = m;
            } else {
                r = m;
            }
        }
        let got = grid_inverse_cdf(0, n, a, b, 0.5);
        assert!((got - l).abs() < 1e-5 * l, "{got} vs {l}");
    }

    #[test]
    fn tau_mean_matches_gamma_moment() {
        let d = data(80, 3, 1.0);
        let st = ModelState::new(&d, &[0], 0.5).unwrap();
        let beta = posterior_mean_beta(&st).unwrap();
        let resid = d.y_ss() - dot(st.xty(), &beta);
        let hp = Hyperpriors::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 20_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += gibbs_pi_tau(&st, &d, &hp, &beta, &mut rng).unwrap().1;
        }
        let mean = acc / draws as f64;
        // E[τ]·r/2 = n/2, relative sd of the mean = 1/√(draws · n/2)
        let rel = (mean * resid / 2.0) / 40.0 - 1.0;
        assert!(rel.abs() < 4.0 / (draws as f64 * 40.0).sqrt());
    }

    #[test]
    fn heritability_limits() {
        let d = data(50, 3, 1.0);
        let empty = ModelState::empty(&d, 0.5).unwrap();
        assert_eq!(heritability_estimate(&empty, &d, &[]), 0.0);
        // y exactly in the span with a vanishing penalty
        let x = d.x().clone();
        let y: Vec<f64> = (0..50).map(|i| x[(i, 0)] - 2.0 * x[(i, 2)]).collect();
        let exact = Dataset::new(x, y).unwrap();
        let st = ModelState::new(&exact, &[0, 2], 1.0 - 1e-12).unwrap();
        let beta = posterior_mean_beta(&st).unwrap();
        assert!(heritability_estimate(&st, &exact, &beta) > 1.0 - 1e-9);
    }
}
