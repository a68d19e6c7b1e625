use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::exchange::{centered_ss, log_l_for, LogRatioTerms};
use super::gibbs::{gibbs_pi_tau, heritability_estimate};
use super::kernel::{propose, ProposalKernel};
use super::{sample_synthetic_y, ChainOutput, DriftCheck, SystemSolver};
use crate::model::{log_prior_gamma, rao_blackwell_all, Dataset, Hyperpriors, ModelError, ModelState};
use crate::solvers::SolverOptions;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub sampling_steps: usize,
    /// Rao-Blackwellize (and draw `π`, `τ`) every this many recorded steps.
    pub rb_interval: usize,
    pub seed: u64,
    /// ChaCha stream, so chains sharing a seed stay independent.
    pub stream: u64,
    pub hyperpriors: Hyperpriors,
    pub kernel: ProposalKernel,
    pub solver: SolverOptions,
    /// Compare the maintained factor against a fresh one this often.
    pub drift_interval: usize,
    pub drift_tolerance: f64,
    /// Count visits to each `(γ, h)`; only sensible for tiny problems.
    pub record_states: bool,
    /// Starting model; chosen by marginal correlation when `None`.
    pub initial_gamma: Option<Vec<usize>>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 2_000,
            sampling_steps: 10_000,
            rb_interval: 1_000,
            seed: 0,
            stream: 0,
            hyperpriors: Hyperpriors::default(),
            kernel: ProposalKernel::default(),
            solver: SolverOptions::default(),
            drift_interval: 1_000,
            drift_tolerance: 1e-8,
            record_states: false,
            initial_gamma: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.hyperpriors.validate()?;
        self.kernel.validate(&self.hyperpriors)?;
        if self.rb_interval == 0 || self.drift_interval == 0 {
            return Err(ModelError::Domain("rb_interval and drift_interval must be at least 1".into()));
        }
        if !(self.drift_tolerance > 0.0) {
            return Err(ModelError::Domain("drift tolerance must be positive".into()));
        }
        self.solver.validate(0)?;
        Ok(())
    }
}

/// Top `k` usable covariates by marginal `|corr(x_j, y)|` with
/// `k = max(1, round(N √(pi_min pi_max)))`, capped at the model size limit.
pub fn initial_gamma(data: &Dataset, hp: &Hyperpriors) -> Vec<usize> {
    let usable = data.usable_count();
    let k = ((usable as f64 * (hp.pi_min * hp.pi_max).sqrt()).round() as usize)
        .max(1)
        .min(data.max_model_size());
    let corr = data.marginal_correlations();
    let mut idx: Vec<usize> = (0..data.n_covariates()).filter(|&j| data.is_usable(j)).collect();
    idx.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Build the starting state, skipping covariates that are collinear with
/// those already taken.
fn starting_state(data: &Dataset, gamma: &[usize], h: f64) -> Result<ModelState, ModelError> {
    let mut state = ModelState::empty(data, h)?;
    for &j in gamma {
        match state.add(data, j) {
            Ok(()) => {}
            Err(ModelError::Linalg(e)) => log::debug!("skipping covariate {j} at start: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

/// Lazily filled `log P(γ)` by model size.
struct PriorTable {
    ncov: usize,
    hp: Hyperpriors,
    values: Vec<Option<f64>>,
}

impl PriorTable {
    fn new(ncov: usize, hp: &Hyperpriors) -> Self {
        Self {
            ncov,
            hp: hp.clone(),
            values: vec![None; ncov + 1],
        }
    }

    fn get(&mut self, k: usize) -> Result<f64, ModelError> {
        if let Some(v) = self.values[k] {
            return Ok(v);
        }
        let v = log_prior_gamma(k, self.ncov, &self.hp)?;
        self.values[k] = Some(v);
        Ok(v)
    }
}

/// `β̂` of `from` rearranged to the order of `to`, zero for new covariates.
fn carry_over(from: &ModelState, beta: &[f64], to: &ModelState) -> Vec<f64> {
    to.order()
        .iter()
        .map(|&j| from.position(j).map_or(0.0, |p| beta[p]))
        .collect()
}

/// Run one chain.
///
/// Deterministic given the data and configuration. Numerical failures
/// inside a step reject that step and are counted.
pub fn run_chain(data: &Dataset, config: &ChainConfig) -> Result<ChainOutput, ModelError> {
    config.validate()?;
    let hp = &config.hyperpriors;
    if data.usable_count() == 0 {
        return Err(ModelError::Data("no covariate has positive variance".into()));
    }
    if !(data.y_ss() > 0.0) {
        return Err(ModelError::Data("the response is constant".into()));
    }
    let ncov = data.n_covariates();
    let n = data.n();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);

    let h0 = config.kernel.snap_h(0.5 * (hp.h_min + hp.h_max));
    let gamma0 = match &config.initial_gamma {
        Some(g) => g.clone(),
        None => initial_gamma(data, hp),
    };
    let mut state = starting_state(data, &gamma0, h0)?;
    if state.size() < hp.min_model_size() {
        return Err(ModelError::Data("could not build a non-empty starting model".into()));
    }

    let mut solver = SystemSolver::new(config.solver.clone());
    let mut priors = PriorTable::new(ncov, hp);
    let mut beta = solver.solve(&state, state.xty(), None)?;
    let (mut log_l_y, _) = log_l_for(&mut solver, &state, n, data.y_ss(), state.xty(), Some(beta.clone()))?;
    let mut out = ChainOutput::new(ncov);
    let total = config.burn_in + config.sampling_steps;

    for step in 0..total {
        out.proposals += 1;
        match exchange_step(data, config, &mut rng, &mut solver, &mut priors, &state, &beta, log_l_y) {
            Ok(Some((next, next_beta, next_log_l))) => {
                state = next;
                beta = next_beta;
                log_l_y = next_log_l;
                out.accepted += 1;
            }
            Ok(None) => {}
            Err(e) => {
                log::debug!("step {step}: {e}");
                out.numerical_rejections += 1;
            }
        }

        if (step + 1) % config.drift_interval == 0 {
            let drift = state.factor_drift(data)?;
            let repaired = drift > config.drift_tolerance;
            if repaired {
                log::warn!("factor drift {drift:e} at step {}; refactoring", step + 1);
                state.refactor(data)?;
            }
            out.drift_checks.push(DriftCheck {
                step: step + 1,
                drift,
                repaired,
            });
        }

        if step < config.burn_in {
            continue;
        }
        let t = step - config.burn_in;
        record(&mut out, data, config, &state, &beta);
        if (t + 1) % config.rb_interval == 0 {
            rao_blackwellize(&mut out, data, hp, &state, &beta, &mut rng);
        }
    }
    if config.sampling_steps > 0 && out.rb_invocations == 0 {
        rao_blackwellize(&mut out, data, hp, &state, &beta, &mut rng);
    }
    out.icf = solver.stats().clone();
    Ok(out)
}

type Accepted = (ModelState, Vec<f64>, f64);

/// One propose/accept round. `Ok(None)` is an ordinary rejection.
#[allow(clippy::too_many_arguments)]
fn exchange_step(
    data: &Dataset,
    config: &ChainConfig,
    rng: &mut ChaCha20Rng,
    solver: &mut SystemSolver,
    priors: &mut PriorTable,
    state: &ModelState,
    beta: &[f64],
    log_l_y: f64,
) -> Result<Option<Accepted>, ModelError> {
    let n = data.n();
    let prop = propose(state, data, &config.hyperpriors, &config.kernel, rng)?;
    let next = prop.state;
    let unchanged = state.same_model(&next);
    let (log_alpha, next_beta, next_log_l) = if unchanged {
        // every likelihood term cancels; only the path ratio is left
        (prop.log_kernel_ratio, carry_over(state, beta, &next), log_l_y)
    } else {
        let warm = carry_over(state, beta, &next);
        let (ly_next, beta_next) = log_l_for(solver, &next, n, data.y_ss(), next.xty(), Some(warm))?;
        let y_tilde = sample_synthetic_y(&next, data, rng)?;
        let ss = centered_ss(&y_tilde);
        let (lt_cur, _) = log_l_for(solver, state, n, ss, &data.xt_sub(state.order(), &y_tilde), None)?;
        let (lt_next, _) = log_l_for(solver, &next, n, ss, &data.xt_sub(next.order(), &y_tilde), None)?;
        let terms = LogRatioTerms {
            kernel: prop.log_kernel_ratio,
            synthetic: lt_cur - lt_next,
            observed: ly_next - log_l_y,
            prior: priors.get(next.size())? - priors.get(state.size())?,
        };
        (terms.total(), beta_next, ly_next)
    };
    let u: f64 = rng.random();
    if log_alpha >= 0.0 || u.ln() < log_alpha {
        Ok(Some((next, next_beta, next_log_l)))
    } else {
        Ok(None)
    }
}

fn record(out: &mut ChainOutput, data: &Dataset, config: &ChainConfig, state: &ModelState, beta: &[f64]) {
    out.sampling_steps += 1;
    for (&j, &b) in state.order().iter().zip(beta) {
        out.inclusion_counts[j] += 1;
        out.raw_beta_sum[j] += b;
    }
    out.h_samples.push(state.h());
    out.size_samples.push(state.size());
    out.heritability_samples.push(heritability_estimate(state, data, beta));
    if config.record_states {
        *out
            .state_counts
            .entry((state.gamma_sorted(), state.h().to_bits()))
            .or_insert(0) += 1;
    }
}

fn rao_blackwellize(
    out: &mut ChainOutput,
    data: &Dataset,
    hp: &Hyperpriors,
    state: &ModelState,
    beta: &[f64],
    rng: &mut ChaCha20Rng,
) {
    let rb = rao_blackwell_all(state, data, hp);
    for j in 0..out.n_covariates {
        out.rb_pip_sum[j] += rb.pip[j];
        out.rb_beta_sum[j] += rb.beta[j];
    }
    out.rb_invocations += 1;
    out.rb_fallbacks += rb.fallbacks as u64;
    match gibbs_pi_tau(state, data, hp, beta, rng) {
        Ok((pi, tau)) => {
            out.pi_samples.push(pi);
            out.tau_samples.push(tau);
            out.pi_tau_records.push(out.sampling_steps.saturating_sub(1));
        }
        Err(e) => log::debug!("pi/tau draw skipped: {e}"),
    }
}
