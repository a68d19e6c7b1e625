//! Local proposals on `(γ, h)`.
//!
//! A proposal applies `m` single-covariate flips, `m` drawn from a
//! truncated geometric law, then moves `h`. Each flip adds a uniformly
//! chosen excluded covariate or removes a uniformly chosen included one; the
//! add/remove probabilities depend on the current size so that the size cap
//! and minimum size are never violated. The returned log kernel ratio is
//! that of the reversed flip path against the forward one.

use rand::Rng;

use crate::model::{Dataset, Hyperpriors, ModelError, ModelState};

#[derive(Clone, Debug, PartialEq)]
pub struct ProposalKernel {
    /// Success probability of the geometric flip-count law (0.5 gives
    /// mean 2 before truncation).
    pub flip_p: f64,
    pub max_flips: usize,
    /// Half-width of the uniform random walk on `h`.
    pub h_step: f64,
    /// Probability of an add move when both add and remove are possible.
    pub add_prob: f64,
    /// Restrict `h` to these values and walk between neighbours.
    pub h_grid: Option<Vec<f64>>,
}

impl Default for ProposalKernel {
    fn default() -> Self {
        Self {
            flip_p: 0.5,
            max_flips: 10,
            h_step: 0.05,
            add_prob: 0.5,
            h_grid: None,
        }
    }
}

impl ProposalKernel {
    pub fn validate(&self, hp: &Hyperpriors) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Domain(msg));
        if !(self.flip_p > 0.0 && self.flip_p <= 1.0) {
            return bad(format!("flip_p must lie in (0, 1], got {}", self.flip_p));
        }
        if self.max_flips == 0 {
            return bad("max_flips must be at least 1".into());
        }
        if !(self.h_step > 0.0 && self.h_step < 0.5) {
            return bad(format!("h_step must lie in (0, 0.5), got {}", self.h_step));
        }
        if !(self.add_prob > 0.0 && self.add_prob < 1.0) {
            return bad(format!("add_prob must lie in (0, 1), got {}", self.add_prob));
        }
        if let Some(grid) = &self.h_grid {
            if grid.is_empty() {
                return bad("h grid is empty".into());
            }
            if grid.windows(2).any(|w| !(w[0] < w[1])) {
                return bad("h grid must be strictly increasing".into());
            }
            if grid.iter().any(|&h| !hp.h_in_support(h)) {
                return bad("h grid leaves the prior support".into());
            }
        }
        Ok(())
    }

    /// Probabilities of `m = 1..=max_flips`.
    pub fn flip_count_pmf(&self) -> Vec<f64> {
        let w: Vec<f64> = (0..self.max_flips)
            .map(|i| self.flip_p * (1.0 - self.flip_p).powi(i as i32))
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    pub fn sample_flip_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>();
        for (i, p) in self.flip_count_pmf().into_iter().enumerate() {
            if u < p {
                return i + 1;
            }
            u -= p;
        }
        self.max_flips
    }

    /// `(P(add), P(remove))` at a model of size `k` with `excluded`
    /// candidates left.
    pub fn move_probs(&self, k: usize, excluded: usize, cap: usize, min_size: usize) -> (f64, f64) {
        let can_add = k < cap && excluded > 0;
        let can_remove = k > min_size;
        match (can_add, can_remove) {
            (true, true) => (self.add_prob, 1.0 - self.add_prob),
            (true, false) => (1.0, 0.0),
            (false, true) => (0.0, 1.0),
            (false, false) => (0.0, 0.0),
        }
    }

    /// Nearest grid value to `h` (or `h` itself without a grid).
    pub fn snap_h(&self, h: f64) -> f64 {
        match &self.h_grid {
            None => h,
            Some(grid) => grid[nearest(grid, h)],
        }
    }

    fn propose_h<R: Rng + ?Sized>(&self, h: f64, hp: &Hyperpriors, rng: &mut R) -> f64 {
        match &self.h_grid {
            Some(grid) => {
                let i = nearest(grid, h);
                let up = rng.random::<bool>();
                match (up, i) {
                    (true, i) if i + 1 < grid.len() => grid[i + 1],
                    (false, i) if i > 0 => grid[i - 1],
                    _ => grid[i],
                }
            }
            None => {
                let (lo, hi) = (hp.h_min, hp.h_max);
                let mut x = h + rng.random_range(-self.h_step..self.h_step);
                // reflect into (lo, hi); the step is shorter than the interval
                // in any sane configuration, but loop to be safe
                while x < lo || x > hi {
                    x = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
                }
                if hp.h_in_support(x) {
                    x
                } else {
                    h
                }
            }
        }
    }
}

fn nearest(grid: &[f64], h: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - h).abs().total_cmp(&(b.1 - h).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub state: ModelState,
    /// `log K(θ | θ′) − log K(θ′ | θ)` along the sampled flip path.
    pub log_kernel_ratio: f64,
    pub flips: usize,
}

fn pick_excluded<R: Rng + ?Sized>(state: &ModelState, data: &Dataset, excluded: usize, rng: &mut R) -> usize {
    let ncov = data.n_covariates();
    let free = |j: usize| data.is_usable(j) && !state.contains(j);
    if 2 * excluded >= ncov {
        loop {
            let j = rng.random_range(0..ncov);
            if free(j) {
                return j;
            }
        }
    }
    let target = rng.random_range(0..excluded);
    (0..ncov).filter(|&j| free(j)).nth(target).expect("excluded count is consistent")
}

/// Draw `θ′ ~ K(· | θ)`. The factor of the proposed state is updated
/// incrementally; a numerically collinear addition is an error, which the
/// caller treats as a rejection.
pub fn propose<R: Rng + ?Sized>(
    state: &ModelState,
    data: &Dataset,
    hp: &Hyperpriors,
    kernel: &ProposalKernel,
    rng: &mut R,
) -> Result<Proposal, ModelError> {
    let cap = data.max_model_size();
    let usable = data.usable_count();
    let min_size = hp.min_model_size();
    let flips = kernel.sample_flip_count(rng);
    let mut next = state.clone();
    let mut log_ratio = 0.0;

    for _ in 0..flips {
        let k = next.size();
        let excluded = usable - k;
        let (p_add, p_remove) = kernel.move_probs(k, excluded, cap, min_size);
        if p_add == 0.0 && p_remove == 0.0 {
            continue;
        }
        let add = rng.random::<f64>() < p_add;
        if add {
            let j = pick_excluded(&next, data, excluded, rng);
            let (_, back) = kernel.move_probs(k + 1, excluded - 1, cap, min_size);
            log_ratio += (back / (k + 1) as f64).ln() - (p_add / excluded as f64).ln();
            next.add(data, j)?;
        } else {
            let j = next.order()[rng.random_range(0..k)];
            let (back, _) = kernel.move_probs(k - 1, excluded + 1, cap, min_size);
            log_ratio += (back / (excluded + 1) as f64).ln() - (p_remove / k as f64).ln();
            next.remove(data, j)?;
        }
    }
    let h = kernel.propose_h(state.h(), hp, rng);
    next.set_h(h)?;
    Ok(Proposal {
        state: next,
        log_kernel_ratio: log_ratio,
        flips,
    })
}
