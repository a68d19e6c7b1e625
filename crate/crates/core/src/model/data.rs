use std::sync::OnceLock;

use super::ModelError;
use crate::linalg::{dot, DenseMatrix};

/// Designs with at most this many covariates get a cached `XᵗX`.
const GRAM_CACHE_LIMIT: usize = 4096;

/// Column-centered design and centered response.
///
/// `s_j` is the population variance (divisor `n`) of column `j`; columns
/// whose variance is negligible are marked unusable and never enter a model.
#[derive(Debug)]
pub struct Dataset {
    x: DenseMatrix,
    y: Vec<f64>,
    s: Vec<f64>,
    y_ss: f64,
    usable: Vec<bool>,
    xty: Vec<f64>,
    col_sq: Vec<f64>,
    gram: OnceLock<Option<DenseMatrix>>,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        let gram = OnceLock::new();
        if let Some(g) = self.gram.get() {
            let _ = gram.set(g.clone());
        }
        Self {
            x: self.x.clone(),
            y: self.y.clone(),
            s: self.s.clone(),
            y_ss: self.y_ss,
            usable: self.usable.clone(),
            xty: self.xty.clone(),
            col_sq: self.col_sq.clone(),
            gram,
        }
    }
}

pub(crate) fn center(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
    // one refinement pass removes the rounding left by the first
    let resid = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= resid;
    }
    mean + resid
}

/// Center every column of `x` in place.
pub fn center_columns(x: &mut DenseMatrix) {
    for j in 0..x.cols() {
        center(x.col_mut(j));
    }
}

impl Dataset {
    /// Center `x` column-wise and `y`, then cache the summaries the model
    /// needs.
    pub fn new(mut x: DenseMatrix, mut y: Vec<f64>) -> Result<Self, ModelError> {
        let n = x.rows();
        if n < 2 {
            return Err(ModelError::Data(format!("need at least 2 samples, got {n}")));
        }
        if y.len() != n {
            return Err(ModelError::Data(format!(
                "response has {} entries but the design has {n} rows",
                y.len()
            )));
        }
        if !x.is_finite() {
            return Err(ModelError::Data("design contains non-finite entries".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Data(format!("response entry {i} is not finite")));
        }
        let ncov = x.cols();
        for j in 0..ncov {
            center(x.col_mut(j));
        }
        center(&mut y);
        let col_sq: Vec<f64> = (0..ncov).map(|j| dot(x.col(j), x.col(j))).collect();
        let s: Vec<f64> = col_sq.iter().map(|c| c / n as f64).collect();
        let s_max = s.iter().cloned().fold(0.0, f64::max);
        let usable = s.iter().map(|&v| v > 1e-12 * s_max.max(1e-300)).collect();
        let xty = (0..ncov).map(|j| dot(x.col(j), &y)).collect();
        let y_ss = dot(&y, &y);
        Ok(Self {
            x,
            y,
            s,
            y_ss,
            usable,
            xty,
            col_sq,
            gram: OnceLock::new(),
        })
    }

    /// Same design, new response. Reuses the centered design and any cached
    /// Gram matrix.
    pub fn with_response(&self, mut y: Vec<f64>) -> Result<Self, ModelError> {
        if y.len() != self.n() {
            return Err(ModelError::Data(format!(
                "response has {} entries but the design has {} rows",
                y.len(),
                self.n()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Data(format!("response entry {i} is not finite")));
        }
        center(&mut y);
        let mut out = self.clone();
        out.xty = (0..self.n_covariates()).map(|j| dot(self.x.col(j), &y)).collect();
        out.y_ss = dot(&y, &y);
        out.y = y;
        Ok(out)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn n_covariates(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// `yᵗy − nȳ²`.
    pub fn y_ss(&self) -> f64 {
        self.y_ss
    }

    pub fn is_usable(&self, j: usize) -> bool {
        self.usable[j]
    }

    pub fn usable_count(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }

    /// `x_jᵗy` for every covariate.
    pub fn xty_all(&self) -> &[f64] {
        &self.xty
    }

    pub fn col_sq(&self, j: usize) -> f64 {
        self.col_sq[j]
    }

    /// Largest admissible model: `min(n − 1, usable covariates)`.
    pub fn max_model_size(&self) -> usize {
        (self.n() - 1).min(self.usable_count())
    }

    fn gram(&self) -> Option<&DenseMatrix> {
        self.gram
            .get_or_init(|| (self.n_covariates() <= GRAM_CACHE_LIMIT).then(|| self.x.gram()))
            .as_ref()
    }

    /// `x_iᵗx_j`.
    pub fn cross(&self, i: usize, j: usize) -> f64 {
        match self.gram() {
            Some(g) => g[(i, j)],
            None => dot(self.x.col(i), self.x.col(j)),
        }
    }

    /// `X_γᵗx_j` for the covariates in `gamma`, in the given order.
    pub fn cross_with(&self, gamma: &[usize], j: usize) -> Vec<f64> {
        gamma.iter().map(|&i| self.cross(i, j)).collect()
    }

    /// `X_γᵗX_γ` with rows and columns in the order of `gamma`.
    pub fn gram_sub(&self, gamma: &[usize]) -> DenseMatrix {
        let k = gamma.len();
        DenseMatrix::from_fn(k, k, |a, b| self.cross(gamma[a], gamma[b]))
    }

    /// `X_γᵗv`.
    pub fn xt_sub(&self, gamma: &[usize], v: &[f64]) -> Vec<f64> {
        gamma.iter().map(|&j| dot(self.x.col(j), v)).collect()
    }

    /// `X_γ β`.
    pub fn x_sub_mul(&self, gamma: &[usize], beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (&j, &b) in gamma.iter().zip(beta) {
            for (o, &x) in out.iter_mut().zip(self.x.col(j)) {
                *o += b * x;
            }
        }
        out
    }

    /// Sample correlation of each covariate with `y` (0 for unusable ones).
    pub fn marginal_correlations(&self) -> Vec<f64> {
        (0..self.n_covariates())
            .map(|j| {
                if !self.usable[j] || self.y_ss <= 0.0 {
                    0.0
                } else {
                    self.xty[j] / (self.col_sq[j] * self.y_ss).sqrt()
                }
            })
            .collect()
    }
}
