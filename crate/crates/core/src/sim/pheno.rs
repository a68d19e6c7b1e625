use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::SimError;
use crate::linalg::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct PhenoSpec {
    pub n_causal: usize,
    /// Target in-sample heritability `1 − Var(ε)/Var(y)`.
    pub h_target: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phenotype {
    pub y: Vec<f64>,
    /// Scaled effects, zero outside the causal set.
    pub beta_true: Vec<f64>,
    /// Causal covariates in increasing order.
    pub gamma_true: Vec<usize>,
}

impl Phenotype {
    pub fn causal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.beta_true.len()];
        for &j in &self.gamma_true {
            mask[j] = true;
        }
        mask
    }
}

/// Population variance and covariance with divisor `n`.
fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        vaa += dx * dx;
        vbb += dy * dy;
        vab += dx * dy;
    }
    (vaa / n, vbb / n, vab / n)
}

/// `y = λ X_γ β_γ + ε` with `β_γ ~ N(0, I)`, `ε ~ N(0, I)` and `λ > 0`
/// chosen so that the in-sample heritability equals `h_target` exactly.
pub fn simulate_phenotype(x: &DenseMatrix, spec: &PhenoSpec) -> Result<Phenotype, SimError> {
    let (n, p) = (x.rows(), x.cols());
    if !(spec.h_target > 0.0 && spec.h_target < 1.0) {
        return Err(SimError::Spec(format!("h_target must lie in (0, 1), got {}", spec.h_target)));
    }
    if spec.n_causal > p {
        return Err(SimError::Spec(format!("{} causal covariates requested from {p}", spec.n_causal)));
    }
    if spec.n_causal == 0 {
        return Err(SimError::ZeroSignal);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut gamma = index::sample(&mut rng, p, spec.n_causal).into_vec();
    gamma.sort_unstable();
    let effects: Vec<f64> = gamma.iter().map(|_| rng.sample(StandardNormal)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let mut g = vec![0.0; n];
    for (&j, &b) in gamma.iter().zip(&effects) {
        for (gi, &xij) in g.iter_mut().zip(x.col(j)) {
            *gi += b * xij;
        }
    }
    let (vg, ve, c) = moments(&g, &noise);
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(vg > 1e-24 * scale.max(1.0).powi(2)) {
        return Err(SimError::ZeroSignal);
    }
    // Var(λg + ε) = Ve / (1 − h)  ⇔  Vg λ² + 2Cλ − D = 0, D = Ve h / (1 − h)
    let h = spec.h_target;
    let d = ve * h / (1.0 - h);
    let disc = (c * c + vg * d).sqrt();
    let lambda = if c >= 0.0 { d / (c + disc) } else { (disc - c) / vg };

    let y = g.iter().zip(&noise).map(|(gi, e)| lambda * gi + e).collect();
    let mut beta_true = vec![0.0; p];
    for (&j, &b) in gamma.iter().zip(&effects) {
        beta_true[j] = lambda * b;
    }
    Ok(Phenotype {
        y,
        beta_true,
        gamma_true: gamma,
    })
}

/// A phenotype with no genetic signal: `y = ε`.
pub fn pure_noise(n: usize, p: usize, seed: u64) -> Phenotype {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Phenotype {
        y: (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        beta_true: vec![0.0; p],
        gamma_true: Vec::new(),
    }
}
