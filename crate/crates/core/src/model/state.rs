use super::prior::sigma_beta_sq_from_sum;
use super::{Dataset, ModelError};
use crate::linalg::{cholesky, LinalgError, PenaltyDiag, UpperTriangular};

/// Current `(γ, h)` together with `R = chol(X_γᵗX_γ)` and `X_γᵗy`.
///
/// Covariates are kept in the order they entered, which is also the column
/// order of `R` and of every vector indexed by model position.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    order: Vec<usize>,
    included: Vec<bool>,
    h: f64,
    s_sum: f64,
    r: UpperTriangular,
    xty: Vec<f64>,
}

impl ModelState {
    pub fn new(data: &Dataset, gamma: &[usize], h: f64) -> Result<Self, ModelError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(ModelError::HOutOfRange(h));
        }
        let ncov = data.n_covariates();
        let mut included = vec![false; ncov];
        for &j in gamma {
            if j >= ncov {
                return Err(LinalgError::IndexOutOfRange { index: j, dim: ncov }.into());
            }
            if !data.is_usable(j) {
                return Err(ModelError::UnusableCovariate(j));
            }
            if included[j] {
                return Err(ModelError::AlreadyIncluded(j));
            }
            included[j] = true;
        }
        let cap = data.max_model_size();
        if gamma.len() > cap {
            return Err(ModelError::SizeCap { size: gamma.len(), cap });
        }
        let r = cholesky(&data.gram_sub(gamma))?;
        let order = gamma.to_vec();
        Ok(Self {
            s_sum: order.iter().map(|&j| data.s()[j]).sum(),
            xty: order.iter().map(|&j| data.xty_all()[j]).collect(),
            order,
            included,
            h,
            r,
        })
    }

    pub fn empty(data: &Dataset, h: f64) -> Result<Self, ModelError> {
        Self::new(data, &[], h)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn set_h(&mut self, h: f64) -> Result<(), ModelError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(ModelError::HOutOfRange(h));
        }
        self.h = h;
        Ok(())
    }

    /// Included covariates in factor order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn gamma_sorted(&self) -> Vec<usize> {
        let mut g = self.order.clone();
        g.sort_unstable();
        g
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        self.included[j]
    }

    pub fn included_mask(&self) -> &[bool] {
        &self.included
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.order.iter().position(|&i| i == j)
    }

    pub fn r(&self) -> &UpperTriangular {
        &self.r
    }

    /// `X_γᵗy` in factor order.
    pub fn xty(&self) -> &[f64] {
        &self.xty
    }

    pub fn s_sum(&self) -> f64 {
        self.s_sum
    }

    pub fn sigma_beta_sq(&self) -> Result<f64, ModelError> {
        if self.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        sigma_beta_sq_from_sum(self.h, self.s_sum)
    }

    /// `Σ = σ_β⁻¹ I`, so that `RᵗR + Σ² = Ω`.
    pub fn penalty(&self) -> Result<PenaltyDiag, ModelError> {
        let sb2 = self.sigma_beta_sq()?;
        Ok(PenaltyDiag::constant(self.size(), sb2.sqrt().recip())?)
    }

    /// Append covariate `j`; `R` grows by one forward substitution.
    pub fn add(&mut self, data: &Dataset, j: usize) -> Result<(), ModelError> {
        if j >= self.included.len() {
            return Err(LinalgError::IndexOutOfRange { index: j, dim: self.included.len() }.into());
        }
        if self.included[j] {
            return Err(ModelError::AlreadyIncluded(j));
        }
        if !data.is_usable(j) {
            return Err(ModelError::UnusableCovariate(j));
        }
        let cap = data.max_model_size();
        if self.size() + 1 > cap {
            return Err(ModelError::SizeCap { size: self.size() + 1, cap });
        }
        let mut col = data.cross_with(&self.order, j);
        col.push(data.col_sq(j));
        self.r.add_column(&col)?;
        self.order.push(j);
        self.included[j] = true;
        self.xty.push(data.xty_all()[j]);
        self.refresh_s_sum(data);
        Ok(())
    }

    /// Drop covariate `j`; `R` is re-triangularized with Givens rotations.
    pub fn remove(&mut self, data: &Dataset, j: usize) -> Result<(), ModelError> {
        let pos = self.position(j).ok_or(ModelError::NotIncluded(j))?;
        self.r.remove_column(pos)?;
        self.order.remove(pos);
        self.xty.remove(pos);
        self.included[j] = false;
        self.refresh_s_sum(data);
        Ok(())
    }

    fn refresh_s_sum(&mut self, data: &Dataset) {
        self.s_sum = self.order.iter().map(|&j| data.s()[j]).sum();
    }

    /// Fresh `chol(X_γᵗX_γ)` in the current order.
    pub fn fresh_factor(&self, data: &Dataset) -> Result<UpperTriangular, ModelError> {
        Ok(cholesky(&data.gram_sub(&self.order))?)
    }

    /// Max entry-wise gap between the maintained and a fresh factor.
    pub fn factor_drift(&self, data: &Dataset) -> Result<f64, ModelError> {
        Ok(self.r.max_abs_diff(&self.fresh_factor(data)?))
    }

    /// Replace the maintained factor with a fresh one.
    pub fn refactor(&mut self, data: &Dataset) -> Result<(), ModelError> {
        self.r = self.fresh_factor(data)?;
        Ok(())
    }

    /// Same model with the covariates listed in a different order.
    pub(crate) fn same_model(&self, other: &ModelState) -> bool {
        self.h == other.h && self.included == other.included
    }
}
