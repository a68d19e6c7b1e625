//! Iterative complex factorization.
//!
//! Split `A = RᵗR + Σ² = H − iS` with `H = (Rᵗ − iΣ)(R + iΣ)` and
//! `S = RᵗΣ − ΣR`, then iterate
//!
//! ```text
//! β⁽ᵏ⁺¹⁾ = Re[(1 − ω)β⁽ᵏ⁾ + ω H⁻¹(iSβ⁽ᵏ⁾ + z)]
//! ```
//!
//! where `H⁻¹` is applied by one complex forward and one complex backward
//! substitution. Each update costs about `3p²` real multiply-adds.
//!
//! The eigenvalues of `A⁻¹S` are `±iη` with `0 ≤ η < 1`, and the iteration
//! matrix `Ψ(ω) = I − ω(I + (A⁻¹S)²)⁻¹` has eigenvalues `1 − ω/(1 − η²)`.
//! The relaxation is re-tuned every step from a one-step power estimate of
//! `ρ(Ψ)`, assuming `η_min = 0`.

use std::time::Instant;

use num_complex::Complex64;

use super::{PenalizedSystem, SolverError, SolverOptions, SolverReport, StepMonitor, StepOutcome};
use crate::linalg::{
    max_abs_diff, skew_mul_vec, ComplexTriangularPair, LinalgError, PenaltyDiag, UpperTriangular,
};

/// `ρ̂` is clamped to `[0, RHO_CLAMP]` before it drives `ω`.
pub const RHO_CLAMP: f64 = 10.0;
/// Lower bound on `ω`.
pub const OMEGA_FLOOR: f64 = 1e-3;
/// Updates run with `ω = 1` while `k` is below this.
const WARMUP: usize = 3;

/// `ω⁽ᵏ⁺¹⁾ = 2ω⁽ᵏ⁾ / (1 + ω⁽ᵏ⁾ + ρ̂⁽ᵏ⁾)`.
#[inline]
pub fn adapt_omega(omega: f64, rho_hat: f64) -> f64 {
    2.0 * omega / (1.0 + omega + rho_hat)
}

/// `‖β⁽ᵏ⁾ − β⁽ᵏ⁻¹⁾‖₂ / ‖β⁽ᵏ⁻¹⁾ − β⁽ᵏ⁻²⁾‖₂`; 0 once the denominator vanishes.
pub fn estimate_rho(beta_k: &[f64], beta_k1: &[f64], beta_k2: &[f64]) -> f64 {
    let num = diff_norm(beta_k, beta_k1);
    let den = diff_norm(beta_k1, beta_k2);
    if den < 1e-300 {
        0.0
    } else {
        num / den
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Relaxation minimizing `ρ(Ψ(ω))` given the extreme squared moduli of the
/// eigenvalues of `A⁻¹S`: `2 (1/(1 − η²_min) + 1/(1 − η²_max))⁻¹`.
pub fn optimal_omega(eta_min_sq: f64, eta_max_sq: f64) -> Result<f64, SolverError> {
    check_eta(eta_min_sq, eta_max_sq)?;
    Ok(2.0 / (1.0 / (1.0 - eta_min_sq) + 1.0 / (1.0 - eta_max_sq)))
}

/// `ρ(Ψ(ω)) = max{1 − ω/(1 − η²_min), ω/(1 − η²_max) − 1}`.
pub fn psi_spectral_radius(omega: f64, eta_min_sq: f64, eta_max_sq: f64) -> Result<f64, SolverError> {
    check_eta(eta_min_sq, eta_max_sq)?;
    Ok((1.0 - omega / (1.0 - eta_min_sq)).max(omega / (1.0 - eta_max_sq) - 1.0))
}

fn check_eta(lo: f64, hi: f64) -> Result<(), SolverError> {
    for v in [lo, hi] {
        if !(0.0..1.0).contains(&v) {
            return Err(SolverError::Domain(format!("eta^2 must lie in [0, 1), got {v}")));
        }
    }
    if lo > hi {
        return Err(SolverError::Domain(format!("eta_min^2 = {lo} exceeds eta_max^2 = {hi}")));
    }
    Ok(())
}

/// Iterates and relaxation carried between ICF updates.
#[derive(Clone, Debug)]
pub struct IcfState {
    pub beta_prev2: Vec<f64>,
    pub beta_prev: Vec<f64>,
    pub beta_curr: Vec<f64>,
    pub omega: f64,
    pub rho_hat: f64,
    pub iter: usize,
}

impl IcfState {
    pub fn new(beta0: Vec<f64>) -> Self {
        Self {
            beta_prev2: beta0.clone(),
            beta_prev: beta0.clone(),
            beta_curr: beta0,
            omega: 1.0,
            rho_hat: 0.0,
            iter: 0,
        }
    }

    /// Accept `next` as `β⁽ᵏ⁺¹⁾` and pick the relaxation for the following
    /// update.
    fn advance(&mut self, next: Vec<f64>) {
        self.beta_prev2 = std::mem::replace(&mut self.beta_prev, std::mem::replace(&mut self.beta_curr, next));
        self.iter += 1;
        if self.iter >= 2 {
            self.rho_hat = estimate_rho(&self.beta_curr, &self.beta_prev, &self.beta_prev2);
        }
        if self.iter >= WARMUP {
            let rho = self.rho_hat.clamp(0.0, RHO_CLAMP);
            self.omega = adapt_omega(self.omega, rho).max(OMEGA_FLOOR);
        }
    }
}

/// Solve `(RᵗR + Σ²)β = z` by ICF with adaptive relaxation.
///
/// Non-convergence within `max_iter` updates (or early divergence) is
/// reported through `converged = false`, not as an error.
pub fn solve_icf(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    solve_icf_parts(sys.r(), sys.sigma(), sys.z(), opts)
}

/// [`solve_icf`] on borrowed parts, for callers that keep `R` elsewhere.
pub fn solve_icf_parts(
    r: &UpperTriangular,
    sigma: &PenaltyDiag,
    z: &[f64],
    opts: &SolverOptions,
) -> Result<SolverReport, SolverError> {
    let p = r.dim();
    if z.len() != p {
        return Err(LinalgError::DimensionMismatch { expected: p, found: z.len() }.into());
    }
    opts.validate(p)?;
    let start = Instant::now();
    let pair = ComplexTriangularPair::new(r, sigma)?;
    let mut state = IcfState::new(opts.start(p));
    let mut monitor = StepMonitor::new(opts.tolerance);
    let mut omega_trace = Vec::new();
    let mut rhs = vec![Complex64::new(0.0, 0.0); p];
    let mut converged = false;
    let mut max_step = f64::INFINITY;

    while state.iter < opts.max_iter {
        let omega = state.omega;
        omega_trace.push(omega);
        let s_beta = skew_mul_vec(r, sigma, &state.beta_curr);
        for ((c, &zi), &si) in rhs.iter_mut().zip(z).zip(&s_beta) {
            *c = Complex64::new(zi, si);
        }
        pair.solve(&mut rhs);
        let next: Vec<f64> = state
            .beta_curr
            .iter()
            .zip(&rhs)
            .map(|(&b, h)| (1.0 - omega) * b + omega * h.re)
            .collect();
        max_step = max_abs_diff(&next, &state.beta_curr);
        state.advance(next);
        match monitor.observe(max_step) {
            StepOutcome::Converged => {
                converged = true;
                break;
            }
            StepOutcome::Abort => break,
            StepOutcome::Continue => {}
        }
    }
    if p == 0 {
        converged = true;
        max_step = 0.0;
    }

    Ok(SolverReport {
        beta: state.beta_curr,
        iterations: state.iter,
        converged,
        max_step,
        omega_trace,
        rho_hat: Some(state.rho_hat),
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::solve_direct;
    use super::*;
    use crate::linalg::{opcount, DenseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(rng: &mut ChaCha8Rng, n: usize, p: usize, sigma: f64) -> PenalizedSystem {
        let x = DenseMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let z = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        PenalizedSystem::from_gram(&x.gram(), PenaltyDiag::constant(p, sigma).unwrap(), z).unwrap()
    }

    #[test]
    fn omega_update_examples() {
        assert_eq!(adapt_omega(1.0, 0.0), 1.0);
        assert!((adapt_omega(1.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((adapt_omega(2.0 / 3.0, 1.0 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn omega_update_decreases_in_rho() {
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let w = adapt_omega(1.3, k as f64 * 0.1);
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn rho_estimates() {
        let a = [0.0, 0.0];
        let b = [1.0, 1.0];
        let c = [2.0, 2.0];
        assert_eq!(estimate_rho(&c, &b, &a), 1.0);
        assert_eq!(estimate_rho(&b, &b, &a), 0.0);
        assert_eq!(estimate_rho(&b, &a, &a), 0.0);
        let r: f64 = 0.3;
        let v = [1.0, -2.0, 0.5];
        let geo = |k: i32| v.iter().map(|x| r.powi(k) * x).collect::<Vec<_>>();
        assert!((estimate_rho(&geo(5), &geo(4), &geo(3)) - r).abs() < 1e-12);
    }

    #[test]
    fn optimal_omega_examples() {
        assert_eq!(optimal_omega(0.0, 0.0).unwrap(), 1.0);
        assert!((optimal_omega(0.0, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let e: f64 = 0.37;
        assert!((optimal_omega(0.0, e).unwrap() - 2.0 * (1.0 - e) / (2.0 - e)).abs() < 1e-15);
        assert!(optimal_omega(0.0, 1.0).is_err());
        assert!(optimal_omega(-0.1, 0.2).is_err());
        assert!(psi_spectral_radius(1.0, 0.0, 1.2).is_err());
    }

    #[test]
    fn zero_rhs_converges_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let mut sys = random_system(&mut rng, 30, 10, 2.0);
        sys = PenalizedSystem::new(sys.r().clone(), sys.sigma().clone(), vec![0.0; 10]).unwrap();
        let rep = solve_icf(&sys, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.beta, vec![0.0; 10]);
    }

    #[test]
    fn scalar_system_exact_after_one_update() {
        let sys = PenalizedSystem::new(
            UpperTriangular::from_rows(&[[2.0]]).unwrap(),
            PenaltyDiag::constant(1, 1.0).unwrap(),
            vec![10.0],
        )
        .unwrap();
        let rep = solve_icf(&sys, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!((rep.beta[0] - 2.0).abs() < 1e-14);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn empty_system() {
        let sys = PenalizedSystem::new(
            UpperTriangular::empty(),
            PenaltyDiag::new(vec![]).unwrap(),
            vec![],
        )
        .unwrap();
        let rep = solve_icf(&sys, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.beta.is_empty());
    }

    #[test]
    fn matches_direct_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sys = random_system(&mut rng, 120, 40, 1.0);
        let rep = solve_icf(&sys, &SolverOptions::default()).unwrap();
        let exact = solve_direct(&sys).unwrap().beta;
        assert!(rep.converged);
        assert!(max_abs_diff(&rep.beta, &exact) < 1e-6);
        assert!(rep.omega_trace[..3.min(rep.omega_trace.len())].iter().all(|&w| w == 1.0));
        assert!(rep.omega_trace.iter().all(|&w| w > 0.0 && w < 2.0));
    }

    #[test]
    fn max_iter_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let sys = random_system(&mut rng, 50, 20, 0.5);
        let opts = SolverOptions {
            max_iter: 1,
            tolerance: 1e-14,
            ..Default::default()
        };
        let rep = solve_icf(&sys, &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn warm_start_at_solution_stops_at_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let sys = random_system(&mut rng, 80, 25, 1.5);
        let exact = solve_direct(&sys).unwrap().beta;
        let opts = SolverOptions {
            initial_beta: Some(exact.clone()),
            ..Default::default()
        };
        let rep = solve_icf(&sys, &opts).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn work_per_update_is_quadratic() {
        if !opcount::enabled() {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for p in [20usize, 40, 80] {
            let sys = random_system(&mut rng, 3 * p, p, 1.0);
            let opts = SolverOptions {
                max_iter: 5,
                tolerance: 1e-300,
                ..Default::default()
            };
            opcount::take();
            let rep = solve_icf(&sys, &opts).unwrap();
            let per_iter = opcount::take() as f64 / rep.iterations as f64;
            let p2 = (p * p) as f64;
            // S·β: two triangular products; H⁻¹: two triangular solves
            assert!(per_iter >= 1.9 * p2 && per_iter <= 2.2 * p2, "p={p}: {per_iter}");
        }
    }
}
