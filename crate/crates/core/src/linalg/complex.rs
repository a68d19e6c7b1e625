use num_complex::Complex64;

use super::matrix::DenseMatrix;
use super::triangular::UpperTriangular;
use super::{opcount, LinalgError};

/// Positive diagonal penalty `Σ` (so the system matrix carries `Σ²`).
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyDiag {
    diag: Vec<f64>,
}

impl PenaltyDiag {
    pub fn new(diag: Vec<f64>) -> Result<Self, LinalgError> {
        if let Some(index) = diag.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(LinalgError::NonPositivePenalty {
                index,
                value: diag[index],
            });
        }
        Ok(Self { diag })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self, LinalgError> {
        Self::new(vec![value; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.diag
    }

    pub fn squared(&self) -> Vec<f64> {
        self.diag.iter().map(|d| d * d).collect()
    }
}

/// The factor pair of `H = (Rᵗ − iΣ)(R + iΣ)`.
///
/// Neither factor is materialized: both share `R` and differ from it only
/// on the diagonal, so the substitutions read the packed real factor and
/// the penalty directly.
#[derive(Clone, Copy, Debug)]
pub struct ComplexTriangularPair<'a> {
    r: &'a UpperTriangular,
    sigma: &'a PenaltyDiag,
}

impl<'a> ComplexTriangularPair<'a> {
    pub fn new(r: &'a UpperTriangular, sigma: &'a PenaltyDiag) -> Result<Self, LinalgError> {
        if r.dim() != sigma.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: r.dim(),
                found: sigma.dim(),
            });
        }
        Ok(Self { r, sigma })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    /// Solve `(Rᵗ − iΣ) w = v` in place.
    pub fn solve_lower(&self, v: &mut [Complex64]) {
        let p = self.dim();
        assert_eq!(v.len(), p);
        let sig = self.sigma.as_slice();
        for i in 0..p {
            let col = self.r.col(i);
            let mut acc = v[i];
            for (&rki, &wk) in col[..i].iter().zip(&v[..i]) {
                acc -= wk * rki;
            }
            v[i] = acc / Complex64::new(col[i], -sig[i]);
        }
        opcount::add((p * (p + 1) / 2) as u64);
    }

    /// Solve `(R + iΣ) x = w` in place.
    pub fn solve_upper(&self, w: &mut [Complex64]) {
        let p = self.dim();
        assert_eq!(w.len(), p);
        let sig = self.sigma.as_slice();
        for j in (0..p).rev() {
            let col = self.r.col(j);
            let xj = w[j] / Complex64::new(col[j], sig[j]);
            w[j] = xj;
            for (wi, &rij) in w[..j].iter_mut().zip(&col[..j]) {
                *wi -= xj * rij;
            }
        }
        opcount::add((p * (p + 1) / 2) as u64);
    }

    /// `H⁻¹ v` by one forward and one backward substitution.
    pub fn solve(&self, v: &mut [Complex64]) {
        self.solve_lower(v);
        self.solve_upper(v);
    }

    /// Dense `(Rᵗ − iΣ, R + iΣ)`.
    pub fn to_dense(&self) -> (DenseMatrix<Complex64>, DenseMatrix<Complex64>) {
        let p = self.dim();
        let sig = self.sigma.as_slice();
        let upper = DenseMatrix::from_fn(p, p, |i, j| {
            let re = self.r.get(i, j);
            if i == j {
                Complex64::new(re, sig[i])
            } else {
                Complex64::new(re, 0.0)
            }
        });
        let lower = DenseMatrix::from_fn(p, p, |i, j| {
            let u = upper[(j, i)];
            if i == j {
                u.conj()
            } else {
                u
            }
        });
        (lower, upper)
    }
}

/// `S = RᵗΣ − ΣR` applied to `v`, without forming `S`.
pub fn skew_mul_vec(r: &UpperTriangular, sigma: &PenaltyDiag, v: &[f64]) -> Vec<f64> {
    let sig = sigma.as_slice();
    let sv: Vec<f64> = v.iter().zip(sig).map(|(a, s)| a * s).collect();
    let mut out = r.tr_mul_vec(&sv);
    let rv = r.mul_vec(v);
    for ((o, s), x) in out.iter_mut().zip(sig).zip(rv) {
        *o -= s * x;
    }
    out
}

/// Dense `S = RᵗΣ − ΣR`.
pub fn skew_matrix(r: &UpperTriangular, sigma: &PenaltyDiag) -> DenseMatrix {
    let p = r.dim();
    let sig = sigma.as_slice();
    DenseMatrix::from_fn(p, p, |i, j| r.get(j, i) * sig[j] - sig[i] * r.get(i, j))
}
