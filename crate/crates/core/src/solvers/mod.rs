//! Solvers for `(RᵗR + Σ²)β = z`.
//!
//! [`solve_icf`] is the iterative complex factorization method; the rest are
//! the baselines it is benchmarked against. All iterative methods share the
//! same stopping rule: stop once the largest entry-wise change between
//! successive iterates drops below `tolerance`, or give up after
//! `max_iter` updates.

mod direct;
mod dual;
mod icf;
mod krylov;
mod stationary;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Duration;

use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError, PenaltyDiag, UpperTriangular};

pub use direct::solve_direct;
pub use dual::solve_dual;
pub use icf::{
    adapt_omega, estimate_rho, optimal_omega, psi_spectral_radius, solve_icf, solve_icf_parts, IcfState,
    OMEGA_FLOOR, RHO_CLAMP,
};
pub use krylov::{solve_cg, solve_steepest};
pub use stationary::{solve_gauss_seidel, solve_jacobi, solve_sor, MatrixSplitting};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("relaxation parameters outside the admissible range: {0}")]
    Domain(String),
}

/// `(RᵗR + Σ²)β = z`, with `R` the Cholesky factor of `XᵗX`.
///
/// The dense `A = RᵗR + Σ²` is built on first use and cached; the
/// benchmark supplies it up front so that matrix-based baselines start from
/// `A` while ICF starts from `R`.
#[derive(Debug)]
pub struct PenalizedSystem {
    r: UpperTriangular,
    sigma: PenaltyDiag,
    z: Vec<f64>,
    a: OnceLock<DenseMatrix>,
}

impl Clone for PenalizedSystem {
    fn clone(&self) -> Self {
        let a = OnceLock::new();
        if let Some(m) = self.a.get() {
            let _ = a.set(m.clone());
        }
        Self {
            r: self.r.clone(),
            sigma: self.sigma.clone(),
            z: self.z.clone(),
            a,
        }
    }
}

impl PenalizedSystem {
    pub fn new(r: UpperTriangular, sigma: PenaltyDiag, z: Vec<f64>) -> Result<Self, SolverError> {
        let p = r.dim();
        for found in [sigma.dim(), z.len()] {
            if found != p {
                return Err(LinalgError::DimensionMismatch { expected: p, found }.into());
            }
        }
        Ok(Self {
            r,
            sigma,
            z,
            a: OnceLock::new(),
        })
    }

    /// Factor `XᵗX` and keep `A = XᵗX + Σ²` alongside.
    pub fn from_gram(gram: &DenseMatrix, sigma: PenaltyDiag, z: Vec<f64>) -> Result<Self, SolverError> {
        let r = crate::linalg::cholesky(gram)?;
        let sys = Self::new(r, sigma, z)?;
        let mut a = gram.clone();
        a.add_diag(&sys.sigma.squared());
        let _ = sys.a.set(a);
        Ok(sys)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn r(&self) -> &UpperTriangular {
        &self.r
    }

    pub fn sigma(&self) -> &PenaltyDiag {
        &self.sigma
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Dense `A = RᵗR + Σ²`.
    pub fn a(&self) -> &DenseMatrix {
        self.a.get_or_init(|| {
            let mut a = self.r.gram();
            a.add_diag(&self.sigma.squared());
            a
        })
    }

    /// `A v` computed as `Rᵗ(Rv) + Σ²v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.r.tr_mul_vec(&self.r.mul_vec(v));
        for ((o, s), x) in out.iter_mut().zip(self.sigma.as_slice()).zip(v) {
            *o += s * s * x;
        }
        out
    }

    /// Infinity norm of `Aβ − z`.
    pub fn residual_inf(&self, beta: &[f64]) -> f64 {
        let ab = self.apply(beta);
        ab.iter()
            .zip(&self.z)
            .fold(0.0, |m, (a, z)| m.max((a - z).abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    pub omega_sor: f64,
    /// Starting iterate; zero when `None`.
    pub initial_beta: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iter: 200,
            omega_sor: 1.2,
            initial_beta: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, dim: usize) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidOptions(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidOptions("max_iter must be at least 1".into()));
        }
        if let Some(b) = &self.initial_beta {
            if b.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: b.len(),
                }
                .into());
            }
        }
        Ok(())
    }

    pub(crate) fn start(&self, dim: usize) -> Vec<f64> {
        self.initial_beta.clone().unwrap_or_else(|| vec![0.0; dim])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest entry-wise change in the final update.
    pub max_step: f64,
    /// Relaxation used at each ICF update (empty for other methods).
    pub omega_trace: Vec<f64>,
    /// Last spectral-radius estimate (ICF only).
    pub rho_hat: Option<f64>,
    pub wall_time: Duration,
}

/// Solver selector used by the benchmark and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Direct,
    Icf,
    Jacobi,
    GaussSeidel,
    Sor,
    Steepest,
    Cg,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Direct,
        Method::Icf,
        Method::Jacobi,
        Method::GaussSeidel,
        Method::Sor,
        Method::Steepest,
        Method::Cg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Icf => "icf",
            Method::Jacobi => "jacobi",
            Method::GaussSeidel => "gs",
            Method::Sor => "sor",
            Method::Steepest => "steepest",
            Method::Cg => "cg",
        }
    }

    pub fn is_iterative(self) -> bool {
        self != Method::Direct
    }

    pub fn solve(self, sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
        match self {
            Method::Direct => solve_direct(sys),
            Method::Icf => solve_icf(sys, opts),
            Method::Jacobi => solve_jacobi(sys, opts),
            Method::GaussSeidel => solve_gauss_seidel(sys, opts),
            Method::Sor => solve_sor(sys, opts),
            Method::Steepest => solve_steepest(sys, opts),
            Method::Cg => solve_cg(sys, opts),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "chol" | "cholesky" => return Ok(Method::Direct),
            "gauss-seidel" => return Ok(Method::GaussSeidel),
            "conjugate-gradient" => return Ok(Method::Cg),
            _ => {}
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Shared iteration driver: stopping rule, non-finite and divergence guards.
pub(crate) struct StepMonitor {
    tolerance: f64,
    min_step: f64,
}

pub(crate) enum StepOutcome {
    Continue,
    Converged,
    Abort,
}

/// Abort once the step has grown this many times over its smallest value.
pub(crate) const DIVERGENCE_FACTOR: f64 = 1e6;

impl StepMonitor {
    pub(crate) fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            min_step: f64::INFINITY,
        }
    }

    pub(crate) fn observe(&mut self, step: f64) -> StepOutcome {
        if !step.is_finite() {
            return StepOutcome::Abort;
        }
        if step < self.tolerance {
            return StepOutcome::Converged;
        }
        self.min_step = self.min_step.min(step);
        if step > DIVERGENCE_FACTOR * self.min_step {
            return StepOutcome::Abort;
        }
        StepOutcome::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("Chol".parse::<Method>().unwrap(), Method::Direct);
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn options_validation() {
        let mut o = SolverOptions::default();
        assert!(o.validate(3).is_ok());
        o.tolerance = 0.0;
        assert!(o.validate(3).is_err());
        let o = SolverOptions {
            max_iter: 0,
            ..Default::default()
        };
        assert!(o.validate(3).is_err());
        let o = SolverOptions {
            initial_beta: Some(vec![0.0; 2]),
            ..Default::default()
        };
        assert!(o.validate(3).is_err());
    }

    #[test]
    fn system_dimension_checks() {
        let r = UpperTriangular::identity(2);
        let sigma = PenaltyDiag::constant(2, 1.0).unwrap();
        assert!(PenalizedSystem::new(r.clone(), sigma.clone(), vec![1.0]).is_err());
        let sys = PenalizedSystem::new(r, sigma, vec![1.0, 2.0]).unwrap();
        assert_eq!(sys.a(), &{
            let mut m = DenseMatrix::identity(2);
            m.add_diag(&[1.0, 1.0]);
            m
        });
    }

    #[test]
    fn divergence_guard_trips() {
        let mut mon = StepMonitor::new(1e-6);
        assert!(matches!(mon.observe(1.0), StepOutcome::Continue));
        assert!(matches!(mon.observe(1e-3), StepOutcome::Continue));
        assert!(matches!(mon.observe(2e3), StepOutcome::Abort));
        assert!(matches!(StepMonitor::new(1e-6).observe(f64::NAN), StepOutcome::Abort));
    }
}
