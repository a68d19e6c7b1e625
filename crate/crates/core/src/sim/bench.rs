//! Solver benchmark.
//!
//! For each `(mode, p)` cell a pool of `pool_factor · p` genotype columns is
//! generated once together with its Gram matrix. Every trial samples `p`
//! pool columns without replacement, draws `z ~ N(0, I)`, and prepares both
//! `R = chol(X_γᵗX_γ)` and `A = X_γᵗX_γ + Σ²` before any clock starts. The
//! direct solve is the reference for the error of every other method.

use std::collections::BTreeMap;

use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::design::{gen_design, DesignMode, DesignSpec};
use super::SimError;
use crate::linalg::{max_abs_diff, DenseMatrix, PenaltyDiag};
use crate::solvers::{solve_direct, Method, PenalizedSystem, SolverError, SolverOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub p_grid: Vec<usize>,
    pub trials: usize,
    pub modes: Vec<DesignMode>,
    /// Iterative methods to time against the direct solve.
    pub methods: Vec<Method>,
    /// Constant diagonal of `Σ`.
    pub sigma: f64,
    pub pool_factor: usize,
    pub dep_rho: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    /// Run the trials of a cell on the rayon pool.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            p_grid: vec![50, 100, 200, 500],
            trials: 200,
            modes: vec![DesignMode::Ind, DesignMode::Dep],
            methods: vec![Method::Icf, Method::GaussSeidel, Method::Sor, Method::Cg],
            sigma: 4.0,
            pool_factor: 2,
            dep_rho: 0.95,
            seed: 1,
            solver: SolverOptions::default(),
            parallel: true,
        }
    }
}

impl BenchConfig {
    /// The large grid: `n = 3000`, `p` up to 1000, 1000 trials per cell.
    pub fn full() -> Self {
        Self {
            n: 3000,
            p_grid: vec![50, 100, 200, 500, 1000],
            trials: 1000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p_grid.iter().any(|&p| p == 0 || p >= self.n) {
            return Err(SimError::Spec(format!("every p must satisfy 0 < p < n = {}", self.n)));
        }
        if self.pool_factor == 0 {
            return Err(SimError::Spec("pool_factor must be at least 1".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(SimError::Spec(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.methods.contains(&Method::Direct) {
            return Err(SimError::Spec("the direct solve is always run as the reference".into()));
        }
        if self.solver.initial_beta.is_some() {
            return Err(SimError::Spec("benchmark trials always start from zero".into()));
        }
        self.solver.validate(0).map_err(|e| SimError::Spec(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub mode: DesignMode,
    pub method: Method,
    pub p: usize,
    pub trial: usize,
    /// Seconds.
    pub wall_time: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Only recorded for converged runs.
    pub max_error_vs_direct: Option<f64>,
}

struct Pool {
    gram: DenseMatrix,
    usable: Vec<usize>,
}

fn cell_pool(cfg: &BenchConfig, mode: DesignMode, p: usize) -> Result<Pool, SimError> {
    let spec = DesignSpec {
        dep_rho: cfg.dep_rho,
        ..DesignSpec::new(cfg.n, cfg.pool_factor * p, mode, mix(cfg.seed, mode, p, u64::MAX))
    };
    let x = gen_design(&spec)?;
    let gram = x.gram();
    let scale = (0..x.cols()).fold(0.0f64, |m, j| m.max(gram[(j, j)]));
    let usable: Vec<usize> = (0..x.cols()).filter(|&j| gram[(j, j)] > 1e-12 * scale).collect();
    if usable.len() < p {
        return Err(SimError::Spec(format!(
            "only {} non-constant columns available for p = {p}",
            usable.len()
        )));
    }
    Ok(Pool { gram, usable })
}

fn mix(seed: u64, mode: DesignMode, p: usize, trial: u64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [mode as u64 + 1, p as u64, trial] {
        h = (h ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

fn run_trial(cfg: &BenchConfig, pool: &Pool, mode: DesignMode, p: usize, trial: usize) -> Vec<BenchResult> {
    let mut rng = ChaCha20Rng::seed_from_u64(mix(cfg.seed, mode, p, trial as u64));
    let mut cols: Vec<usize> = index::sample(&mut rng, pool.usable.len(), p)
        .into_iter()
        .map(|i| pool.usable[i])
        .collect();
    cols.sort_unstable();
    let gram = DenseMatrix::from_fn(p, p, |a, b| pool.gram[(cols[a], cols[b])]);
    let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();

    let row = |method, wall_time, iterations, converged, err| BenchResult {
        mode,
        method,
        p,
        trial,
        wall_time,
        iterations,
        converged,
        max_error_vs_direct: err,
    };
    let failed = |m| row(m, 0.0, 0, false, None);

    let prepared = PenaltyDiag::constant(p, cfg.sigma)
        .map_err(SolverError::from)
        .and_then(|sigma| PenalizedSystem::from_gram(&gram, sigma, z));
    let sys = match prepared {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{mode} p={p} trial {trial}: preparation failed: {e}");
            return std::iter::once(Method::Direct).chain(cfg.methods.iter().copied()).map(failed).collect();
        }
    };
    let reference = match solve_direct(&sys) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{mode} p={p} trial {trial}: direct solve failed: {e}");
            return std::iter::once(Method::Direct).chain(cfg.methods.iter().copied()).map(failed).collect();
        }
    };
    let mut out = vec![row(Method::Direct, reference.wall_time.as_secs_f64(), 0, true, Some(0.0))];
    for &m in &cfg.methods {
        out.push(match m.solve(&sys, &cfg.solver) {
            Ok(r) => {
                let err = r.converged.then(|| max_abs_diff(&r.beta, &reference.beta));
                row(m, r.wall_time.as_secs_f64(), r.iterations, r.converged, err)
            }
            Err(e) => {
                log::debug!("{m} on {mode} p={p} trial {trial}: {e}");
                failed(m)
            }
        });
    }
    out
}

/// Run every `(mode, p, trial)` combination. Results are ordered by mode,
/// `p`, trial and method, and do not depend on the degree of parallelism.
/// Per-trial failures are recorded, never propagated.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchResult>, SimError> {
    cfg.validate()?;
    let mut results = Vec::new();
    for &mode in &cfg.modes {
        for &p in &cfg.p_grid {
            let pool = cell_pool(cfg, mode, p)?;
            let trial = |t| run_trial(cfg, &pool, mode, p, t);
            let cell: Vec<Vec<BenchResult>> = if cfg.parallel {
                (0..cfg.trials).into_par_iter().map(trial).collect()
            } else {
                (0..cfg.trials).map(trial).collect()
            };
            results.extend(cell.into_iter().flatten());
            log::info!("benchmark cell {mode} p={p} done");
        }
    }
    Ok(results)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub mode: DesignMode,
    pub method: Method,
    pub p: usize,
    pub trials: usize,
    pub failures: usize,
    pub median_wall_time: f64,
    /// Over converged trials.
    pub median_iterations: Option<f64>,
    pub median_log10_error: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median time and failure count per `(mode, method, p)`.
pub fn summarize(results: &[BenchResult]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(DesignMode, usize, Method), Vec<&BenchResult>> = BTreeMap::new();
    for r in results {
        cells.entry((r.mode, r.p, r.method)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((mode, p, method), rows)| {
            let ok: Vec<&&BenchResult> = rows.iter().filter(|r| r.converged).collect();
            CellSummary {
                mode,
                method,
                p,
                trials: rows.len(),
                failures: rows.len() - ok.len(),
                median_wall_time: median(rows.iter().map(|r| r.wall_time).collect()).unwrap_or(0.0),
                median_iterations: median(ok.iter().map(|r| r.iterations as f64).collect()),
                median_log10_error: median(
                    ok.iter()
                        .filter_map(|r| r.max_error_vs_direct)
                        .filter(|e| *e > 0.0)
                        .map(f64::log10)
                        .collect(),
                ),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            n: 200,
            p_grid: vec![10, 30],
            trials: 6,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_parallel_invariant() {
        let strip = |v: Vec<BenchResult>| -> Vec<BenchResult> {
            v.into_iter().map(|r| BenchResult { wall_time: 0.0, ..r }).collect()
        };
        let a = strip(run_benchmark(&tiny()).unwrap());
        let b = strip(run_benchmark(&BenchConfig { parallel: false, ..tiny() }).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 6 * 5);
    }

    #[test]
    fn converged_rows_carry_errors() {
        let res = run_benchmark(&tiny()).unwrap();
        for r in &res {
            assert_eq!(r.converged, r.max_error_vs_direct.is_some());
            if r.method == Method::Icf {
                assert!(r.converged);
                assert!(r.max_error_vs_direct.unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn summary_counts() {
        let res = run_benchmark(&tiny()).unwrap();
        let s = summarize(&res);
        assert_eq!(s.len(), 2 * 2 * 5);
        for c in &s {
            assert_eq!(c.trials, 6);
            assert!(c.failures <= 6);
        }
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(run_benchmark(&BenchConfig { p_grid: vec![300], ..tiny() }).is_err());
        assert!(run_benchmark(&BenchConfig { methods: vec![Method::Direct], ..tiny() }).is_err());
    }
}
