use super::matrix::{dot, DenseMatrix, Scalar};
use super::{opcount, LinalgError};

/// Upper-triangular factor stored packed by columns: column `j` holds rows
/// `0..=j`. Appending a column is a push, which is what the add-covariate
/// update needs.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperTriangular {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn col_start(j: usize) -> usize {
    j * (j + 1) / 2
}

impl UpperTriangular {
    pub fn empty() -> Self {
        Self {
            dim: 0,
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty();
        for j in 0..n {
            let mut col = vec![0.0; j + 1];
            col[j] = 1.0;
            r.push_column(&col);
        }
        r
    }

    /// Take the upper triangle of a square dense matrix. Nonzero entries below
    /// the diagonal are an error.
    pub fn from_dense(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let mut r = Self::empty();
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != 0.0 {
                    return Err(LinalgError::NotTriangular { row: i, col: j });
                }
            }
            r.push_column(&m.col(j)[..=j]);
        }
        Ok(r)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        Self::from_dense(&DenseMatrix::from_rows(rows)?)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Rows `0..=j` of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[col_start(j)..col_start(j + 1)]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[col_start(j)..col_start(j + 1)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.data[col_start(j) + i]
        }
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.data[col_start(i) + i]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.diag(i)).collect()
    }

    pub(crate) fn push_column(&mut self, col: &[f64]) {
        assert_eq!(col.len(), self.dim + 1, "packed column length");
        self.data.extend_from_slice(col);
        self.dim += 1;
    }

    pub(crate) fn pop_column(&mut self) {
        if self.dim > 0 {
            self.dim -= 1;
            self.data.truncate(col_start(self.dim));
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// `RᵗR`.
    pub fn gram(&self) -> DenseMatrix {
        let p = self.dim;
        let mut out = DenseMatrix::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                // (RᵗR)_ij = Σ_k R_ki R_kj, k ≤ min(i, j) = i
                let v = dot(self.col(i), &self.col(j)[..=i]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// `R v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (j, &vj) in v.iter().enumerate() {
            for (o, &r) in out.iter_mut().zip(self.col(j)) {
                *o += r * vj;
            }
        }
        opcount::add(col_start(self.dim) as u64);
        out
    }

    /// `Rᵗ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let out = (0..self.dim).map(|j| dot(self.col(j), &v[..=j])).collect();
        opcount::add(col_start(self.dim) as u64);
        out
    }

    /// Solve `R x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        assert_eq!(b.len(), self.dim);
        let mut x = b.to_vec();
        for j in (0..self.dim).rev() {
            let col = self.col(j);
            let d = col[j];
            if d == 0.0 {
                return Err(LinalgError::SingularDiagonal { index: j });
            }
            let xj = x[j] / d;
            x[j] = xj;
            for (xi, &r) in x[..j].iter_mut().zip(&col[..j]) {
                *xi -= r * xj;
            }
        }
        Ok(x)
    }

    /// Solve `Rᵗ x = b`.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        assert_eq!(b.len(), self.dim);
        let mut x = vec![0.0; self.dim];
        for i in 0..self.dim {
            let col = self.col(i);
            let d = col[i];
            if d == 0.0 {
                return Err(LinalgError::SingularDiagonal { index: i });
            }
            x[i] = (b[i] - dot(&col[..i], &x[..i])) / d;
        }
        Ok(x)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `log |RᵗR| = 2 Σ log r_ii`.
    pub fn log_det_gram(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.diag(i).ln()).sum::<f64>()
    }
}

/// Solve `L x = b` using the lower triangle of `l` (the strict upper part is
/// ignored).
pub fn forward_sub<T: Scalar>(l: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = check_square(l, b.len())?;
    let mut x = b.to_vec();
    for j in 0..n {
        let d = l[(j, j)];
        if d.modulus() == 0.0 {
            return Err(LinalgError::SingularDiagonal { index: j });
        }
        let xj = x[j] / d;
        x[j] = xj;
        let col = l.col(j);
        for i in (j + 1)..n {
            x[i] = x[i] - col[i] * xj;
        }
    }
    Ok(x)
}

/// Solve `U x = b` using the upper triangle of `u` (the strict lower part is
/// ignored).
pub fn backward_sub<T: Scalar>(u: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = check_square(u, b.len())?;
    let mut x = b.to_vec();
    for j in (0..n).rev() {
        let d = u[(j, j)];
        if d.modulus() == 0.0 {
            return Err(LinalgError::SingularDiagonal { index: j });
        }
        let xj = x[j] / d;
        x[j] = xj;
        let col = u.col(j);
        for i in 0..j {
            x[i] = x[i] - col[i] * xj;
        }
    }
    Ok(x)
}

fn check_square<T: Scalar>(m: &DenseMatrix<T>, len: usize) -> Result<usize, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.rows() != len {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            found: len,
        });
    }
    Ok(len)
}
