//! Steepest descent and conjugate gradient. Both apply `A` as
//! `Rᵗ(Rv) + Σ²v` and stop on the same max-entry step rule as the
//! splitting methods.

use std::time::Instant;

use super::{PenalizedSystem, SolverError, SolverOptions, SolverReport, StepMonitor, StepOutcome};
use crate::linalg::{dot, max_abs};

fn report(beta: Vec<f64>, iterations: usize, converged: bool, max_step: f64, start: Instant) -> SolverReport {
    SolverReport {
        beta,
        iterations,
        converged,
        max_step,
        omega_trace: Vec::new(),
        rho_hat: None,
        wall_time: start.elapsed(),
    }
}

fn initial_residual(sys: &PenalizedSystem, beta: &[f64]) -> Vec<f64> {
    let ab = sys.apply(beta);
    sys.z().iter().zip(ab).map(|(z, a)| z - a).collect()
}

pub fn solve_steepest(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    let p = sys.dim();
    opts.validate(p)?;
    let start = Instant::now();
    let mut beta = opts.start(p);
    let mut r = initial_residual(sys, &beta);
    let mut monitor = StepMonitor::new(opts.tolerance);
    let mut iterations = 0;
    let mut max_step = 0.0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let rr = dot(&r, &r);
        if rr == 0.0 {
            max_step = 0.0;
            converged = true;
            break;
        }
        let ar = sys.apply(&r);
        let alpha = rr / dot(&r, &ar);
        for (b, ri) in beta.iter_mut().zip(&r) {
            *b += alpha * ri;
        }
        max_step = alpha.abs() * max_abs(&r);
        for (ri, a) in r.iter_mut().zip(&ar) {
            *ri -= alpha * a;
        }
        match monitor.observe(max_step) {
            StepOutcome::Converged => {
                converged = true;
                break;
            }
            StepOutcome::Abort => break,
            StepOutcome::Continue => {}
        }
    }
    Ok(report(beta, iterations, converged, max_step, start))
}

pub fn solve_cg(sys: &PenalizedSystem, opts: &SolverOptions) -> Result<SolverReport, SolverError> {
    let p = sys.dim();
    opts.validate(p)?;
    let start = Instant::now();
    let mut beta = opts.start(p);
    let mut r = initial_residual(sys, &beta);
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let mut monitor = StepMonitor::new(opts.tolerance);
    let mut iterations = 0;
    let mut max_step = 0.0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        if rr == 0.0 {
            max_step = 0.0;
            converged = true;
            break;
        }
        let ad = sys.apply(&d);
        let alpha = rr / dot(&d, &ad);
        for (b, di) in beta.iter_mut().zip(&d) {
            *b += alpha * di;
        }
        max_step = alpha.abs() * max_abs(&d);
        for (ri, a) in r.iter_mut().zip(&ad) {
            *ri -= alpha * a;
        }
        match monitor.observe(max_step) {
            StepOutcome::Converged => {
                converged = true;
                break;
            }
            StepOutcome::Abort => break,
            StepOutcome::Continue => {}
        }
        let rr_new = dot(&r, &r);
        let gamma = rr_new / rr;
        rr = rr_new;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = ri + gamma * *di;
        }
    }
    Ok(report(beta, iterations, converged, max_step, start))
}
