//! The exchange-algorithm BVSR sampler.
//!
//! Each step proposes a local move on `(γ, h)`, updates the Cholesky factor
//! of `X_γᵗX_γ` by one column add or delete per flip, draws a synthetic
//! response under the proposal and accepts with the exchange ratio, which
//! needs four penalized solves and no determinant.

mod chain;
mod exchange;
mod gibbs;
mod kernel;

use std::collections::BTreeMap;

use crate::model::{ModelError, ModelState};
use crate::solvers::{solve_direct, solve_icf_parts, PenalizedSystem, SolverOptions};

pub use chain::{initial_gamma, run_chain, ChainConfig};
pub use exchange::{exchange_accept_log_ratio, sample_synthetic_y, LogRatioTerms};
pub use gibbs::{gibbs_pi_tau, heritability_estimate};
pub use kernel::{propose, Proposal, ProposalKernel};

/// Iteration counts of the ICF solves made by a chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IcfStats {
    pub solves: u64,
    pub total_iterations: u64,
    pub max_iterations: usize,
    /// Solves that did not converge and were redone directly.
    pub direct_fallbacks: u64,
}

impl IcfStats {
    pub fn mean_iterations(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.solves as f64
        }
    }

    fn merge(&mut self, other: &IcfStats) {
        self.solves += other.solves;
        self.total_iterations += other.total_iterations;
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.direct_fallbacks += other.direct_fallbacks;
    }
}

/// ICF on `Ω β = z` for a model state, falling back to a direct solve when
/// ICF does not converge.
pub(crate) struct SystemSolver {
    opts: SolverOptions,
    stats: IcfStats,
}

impl SystemSolver {
    pub(crate) fn new(opts: SolverOptions) -> Self {
        Self {
            opts,
            stats: IcfStats::default(),
        }
    }

    pub(crate) fn solve(
        &mut self,
        state: &ModelState,
        z: &[f64],
        warm: Option<Vec<f64>>,
    ) -> Result<Vec<f64>, ModelError> {
        if state.is_empty() {
            return Ok(Vec::new());
        }
        let sigma = state.penalty()?;
        let opts = SolverOptions {
            initial_beta: warm,
            ..self.opts.clone()
        };
        let rep = solve_icf_parts(state.r(), &sigma, z, &opts)?;
        self.stats.solves += 1;
        self.stats.total_iterations += rep.iterations as u64;
        self.stats.max_iterations = self.stats.max_iterations.max(rep.iterations);
        if rep.converged {
            return Ok(rep.beta);
        }
        self.stats.direct_fallbacks += 1;
        let sys = PenalizedSystem::new(state.r().clone(), sigma, z.to_vec())?;
        Ok(solve_direct(&sys)?.beta)
    }

    pub(crate) fn stats(&self) -> &IcfStats {
        &self.stats
    }
}

/// Comparison of the maintained factor with a fresh one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftCheck {
    /// Steps completed when the check ran (burn-in included).
    pub step: usize,
    pub drift: f64,
    pub repaired: bool,
}

/// Visit counts keyed by sorted `γ` and the bit pattern of `h`.
pub type StateCounts = BTreeMap<(Vec<usize>, u64), u64>;

/// Accumulators and traces of one or more chains.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainOutput {
    pub n_covariates: usize,
    /// Post-burn-in steps recorded.
    pub sampling_steps: u64,
    pub inclusion_counts: Vec<u64>,
    pub rb_pip_sum: Vec<f64>,
    pub rb_beta_sum: Vec<f64>,
    pub raw_beta_sum: Vec<f64>,
    pub rb_invocations: u64,
    pub rb_fallbacks: u64,
    pub h_samples: Vec<f64>,
    pub size_samples: Vec<usize>,
    /// Explained-variance estimate at each recorded step.
    pub heritability_samples: Vec<f64>,
    pub pi_samples: Vec<f64>,
    pub tau_samples: Vec<f64>,
    /// Recorded-step index (0-based) at which each `π`, `τ` draw was taken.
    pub pi_tau_records: Vec<u64>,
    pub proposals: u64,
    pub accepted: u64,
    /// Proposals rejected because a factor update or a likelihood term
    /// broke down.
    pub numerical_rejections: u64,
    pub icf: IcfStats,
    pub drift_checks: Vec<DriftCheck>,
    /// Filled only when the configuration asks for it.
    pub state_counts: StateCounts,
}

impl ChainOutput {
    pub fn new(n_covariates: usize) -> Self {
        Self {
            n_covariates,
            inclusion_counts: vec![0; n_covariates],
            rb_pip_sum: vec![0.0; n_covariates],
            rb_beta_sum: vec![0.0; n_covariates],
            raw_beta_sum: vec![0.0; n_covariates],
            ..Default::default()
        }
    }

    /// Post-burn-in inclusion frequency of each covariate.
    pub fn pip_raw(&self) -> Vec<f64> {
        let n = self.sampling_steps.max(1) as f64;
        self.inclusion_counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Average of the Rao-Blackwellized estimates.
    pub fn pip_rb(&self) -> Vec<f64> {
        let n = self.rb_invocations.max(1) as f64;
        self.rb_pip_sum.iter().map(|&s| (s / n).clamp(0.0, 1.0)).collect()
    }

    pub fn beta_rb(&self) -> Vec<f64> {
        let n = self.rb_invocations.max(1) as f64;
        self.rb_beta_sum.iter().map(|&s| s / n).collect()
    }

    /// Average of the fitted `β̂` (zero where excluded) over recorded steps.
    pub fn beta_raw(&self) -> Vec<f64> {
        let n = self.sampling_steps.max(1) as f64;
        self.raw_beta_sum.iter().map(|&s| s / n).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn mean_h(&self) -> f64 {
        mean(&self.h_samples)
    }

    pub fn mean_heritability(&self) -> f64 {
        mean(&self.heritability_samples)
    }

    pub fn mean_size(&self) -> f64 {
        mean(&self.size_samples.iter().map(|&s| s as f64).collect::<Vec<_>>())
    }

    pub fn max_drift(&self) -> f64 {
        self.drift_checks.iter().map(|d| d.drift).fold(0.0, f64::max)
    }

    /// Pool another chain on the same covariates. Sums add and traces are
    /// appended, so pooled summaries do not depend on merge order.
    pub fn merge(&mut self, other: &ChainOutput) -> Result<(), ModelError> {
        if self.n_covariates != other.n_covariates {
            return Err(ModelError::Data(format!(
                "cannot merge chains over {} and {} covariates",
                self.n_covariates, other.n_covariates
            )));
        }
        let offset = self.sampling_steps;
        self.pi_tau_records.extend(other.pi_tau_records.iter().map(|r| r + offset));
        self.sampling_steps += other.sampling_steps;
        for (a, b) in self.inclusion_counts.iter_mut().zip(&other.inclusion_counts) {
            *a += b;
        }
        for (dst, src) in [
            (&mut self.rb_pip_sum, &other.rb_pip_sum),
            (&mut self.rb_beta_sum, &other.rb_beta_sum),
            (&mut self.raw_beta_sum, &other.raw_beta_sum),
        ] {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
        self.rb_invocations += other.rb_invocations;
        self.rb_fallbacks += other.rb_fallbacks;
        self.h_samples.extend_from_slice(&other.h_samples);
        self.size_samples.extend_from_slice(&other.size_samples);
        self.heritability_samples.extend_from_slice(&other.heritability_samples);
        self.pi_samples.extend_from_slice(&other.pi_samples);
        self.tau_samples.extend_from_slice(&other.tau_samples);
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.numerical_rejections += other.numerical_rejections;
        self.icf.merge(&other.icf);
        self.drift_checks.extend_from_slice(&other.drift_checks);
        for (k, v) in &other.state_counts {
            *self.state_counts.entry(k.clone()).or_insert(0) += v;
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
