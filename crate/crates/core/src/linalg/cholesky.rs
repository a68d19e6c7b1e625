//! Cholesky factorization in the upper `RᵗR` convention, plus the column
//! append/delete updates used when a covariate enters or leaves the model.

use super::matrix::{dot, DenseMatrix};
use super::triangular::UpperTriangular;
use super::LinalgError;

/// Relative pivot floor: a pivot at or below `PIVOT_TOL * max|A|` is treated
/// as a loss of positive definiteness.
pub const PIVOT_TOL: f64 = 1e-12;

/// Factor a symmetric positive-definite `A` as `RᵗR`.
///
/// Right-looking (outer-product) elimination on a working copy; only the
/// upper triangle of `a` is read.
pub fn cholesky(a: &DenseMatrix) -> Result<UpperTriangular, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let floor = PIVOT_TOL * a.max_abs();
    let mut w = a.clone();
    let mut row = vec![0.0; n];
    for k in 0..n {
        let d = w[(k, k)];
        if !(d > floor) {
            return Err(LinalgError::NotPositiveDefinite { pivot: k, value: d });
        }
        let rkk = d.sqrt();
        w[(k, k)] = rkk;
        for j in (k + 1)..n {
            let v = w[(k, j)] / rkk;
            w[(k, j)] = v;
            row[j] = v;
        }
        for j in (k + 1)..n {
            let rkj = row[j];
            if rkj == 0.0 {
                continue;
            }
            let col = w.col_mut(j);
            for i in (k + 1)..=j {
                col[i] -= row[i] * rkj;
            }
        }
    }
    let mut r = UpperTriangular::empty();
    for j in 0..n {
        r.push_column(&w.col(j)[..=j]);
    }
    Ok(r)
}

/// Givens rotation `(c, s)` with `c·a + s·b = hypot(a, b)` and
/// `−s·a + c·b = 0`. Both inputs zero yields the identity rotation.
pub fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        if a == 0.0 {
            return (1.0, 0.0);
        }
        return (a.signum(), 0.0);
    }
    if a == 0.0 {
        return (0.0, b.signum());
    }
    let r = a.hypot(b);
    (a / r, b / r)
}

impl UpperTriangular {
    /// Append a covariate. `new_col` holds the cross-products of the new
    /// column with the current columns (in factor order) followed by its
    /// squared norm. One forward substitution, `O(p²)`.
    pub fn add_column(&mut self, new_col: &[f64]) -> Result<(), LinalgError> {
        let p = self.dim();
        if new_col.len() != p + 1 {
            return Err(LinalgError::DimensionMismatch {
                expected: p + 1,
                found: new_col.len(),
            });
        }
        let mut col = self.solve_lower_transpose(&new_col[..p])?;
        let d = new_col[p] - dot(&col, &col);
        let scale = (0..p)
            .map(|j| dot(self.col(j), self.col(j)))
            .chain(new_col.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        if !(d > PIVOT_TOL * scale) {
            return Err(LinalgError::NotPositiveDefinite { pivot: p, value: d });
        }
        col.push(d.sqrt());
        self.push_column(&col);
        Ok(())
    }

    /// Delete column `k` (0-based) and restore triangularity with Givens
    /// rotations; the zero row left at the bottom is dropped.
    pub fn remove_column(&mut self, k: usize) -> Result<(), LinalgError> {
        let p = self.dim();
        if k >= p {
            return Err(LinalgError::IndexOutOfRange { index: k, dim: p });
        }
        if k == p - 1 {
            self.pop_column();
            return Ok(());
        }
        // Columns after k keep one extra (sub-diagonal) entry until rotated.
        let mut cols: Vec<Vec<f64>> = (0..p)
            .filter(|&c| c != k)
            .map(|c| self.col(c).to_vec())
            .collect();
        for t in k..(p - 1) {
            let (c, s) = givens(cols[t][t], cols[t][t + 1]);
            for col in cols.iter_mut().skip(t) {
                let a = col[t];
                let b = col[t + 1];
                col[t] = c * a + s * b;
                col[t + 1] = -s * a + c * b;
            }
            cols[t].truncate(t + 1);
        }
        let mut out = UpperTriangular::empty();
        for col in &cols {
            out.push_column(col);
        }
        *self = out;
        Ok(())
    }
}

/// Factor of the Gram matrix with one more covariate appended last.
pub fn chol_add_column(r: &UpperTriangular, new_col: &[f64]) -> Result<UpperTriangular, LinalgError> {
    let mut out = r.clone();
    out.add_column(new_col)?;
    Ok(out)
}

/// Factor of the Gram matrix with covariate `k` (0-based) deleted.
pub fn chol_remove_column(r: &UpperTriangular, k: usize) -> Result<UpperTriangular, LinalgError> {
    let mut out = r.clone();
    out.remove_column(k)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked_r() -> UpperTriangular {
        UpperTriangular::from_rows(&[[3.0, 1.0, 2.0], [0.0, 2.0, 1.0], [0.0, 0.0, 4.0]]).unwrap()
    }

    fn random_gram(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DenseMatrix {
        let x = DenseMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        x.gram()
    }

    #[test]
    fn worked_factorization() {
        let a = DenseMatrix::from_rows(&[[9.0, 3.0, 6.0], [3.0, 5.0, 4.0], [6.0, 4.0, 21.0]])
            .unwrap();
        let r = cholesky(&a).unwrap();
        assert!(r.max_abs_diff(&worked_r()) < 1e-14);
    }

    #[test]
    fn identity_factor() {
        let r = cholesky(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(r, UpperTriangular::identity(3));
    }

    #[test]
    fn reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = DenseMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let mut a = b.gram();
        a.add_diag(&[1.0; 8]);
        let r = cholesky(&a).unwrap();
        assert!(r.gram().max_abs_diff(&a) <= 1e-10 * a.max_abs());
    }

    #[test]
    fn singular_is_not_pd() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })
        ));
        let a = DenseMatrix::from_rows(&[[-1.0]]).unwrap();
        assert!(cholesky(&a).is_err());
    }

    #[test]
    fn worked_add_column() {
        let r2 = chol_add_column(&worked_r(), &[3.0, 7.0, 9.0, 20.0]).unwrap();
        let expect = UpperTriangular::from_rows(&[
            [3.0, 1.0, 2.0, 1.0],
            [0.0, 2.0, 1.0, 3.0],
            [0.0, 0.0, 4.0, 1.0],
            [0.0, 0.0, 0.0, 3.0],
        ])
        .unwrap();
        assert!(r2.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn orthogonal_add_column() {
        let r = UpperTriangular::identity(1);
        assert_eq!(chol_add_column(&r, &[0.0, 1.0]).unwrap(), UpperTriangular::identity(2));
    }

    #[test]
    fn collinear_add_column_fails() {
        // new column duplicates the first: cross products [9, 3, 6], norm 9
        let err = chol_add_column(&worked_r(), &[9.0, 3.0, 6.0, 9.0]).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { pivot: 3, .. }));
    }

    #[test]
    fn add_column_matches_refactorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_gram(&mut rng, 40, 11);
        let idx: Vec<usize> = (0..10).collect();
        let g10 = DenseMatrix::from_fn(10, 10, |i, j| g[(idx[i], idx[j])]);
        let r10 = cholesky(&g10).unwrap();
        let new_col: Vec<f64> = (0..11).map(|i| g[(i, 10)]).collect();
        let r11 = chol_add_column(&r10, &new_col).unwrap();
        let fresh = cholesky(&g).unwrap();
        assert!(r11.max_abs_diff(&fresh) < 1e-10);
    }

    #[test]
    fn worked_remove_column() {
        let r2 = chol_remove_column(&worked_r(), 1).unwrap();
        let expect = UpperTriangular::from_rows(&[[3.0, 2.0], [0.0, 17f64.sqrt()]]).unwrap();
        assert!(r2.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn remove_first_of_identity() {
        let r = chol_remove_column(&UpperTriangular::identity(3), 0).unwrap();
        assert_eq!(r, UpperTriangular::identity(2));
    }

    #[test]
    fn remove_out_of_range() {
        assert!(matches!(
            chol_remove_column(&worked_r(), 3),
            Err(LinalgError::IndexOutOfRange { index: 3, dim: 3 })
        ));
    }

    #[test]
    fn remove_column_matches_refactorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_gram(&mut rng, 50, 12);
        let r = cholesky(&g).unwrap();
        let r11 = chol_remove_column(&r, 4).unwrap();
        let keep: Vec<usize> = (0..12).filter(|&i| i != 4).collect();
        let g11 = DenseMatrix::from_fn(11, 11, |i, j| g[(keep[i], keep[j])]);
        let fresh = cholesky(&g11).unwrap();
        assert!(r11.max_abs_diff(&fresh) < 1e-10);
    }

    #[test]
    fn givens_cases() {
        let (c, s) = givens(1.0, 4.0);
        assert!((c - 1.0 / 17f64.sqrt()).abs() < 1e-15);
        assert!((s - 4.0 / 17f64.sqrt()).abs() < 1e-15);
        assert_eq!(givens(-2.5, 0.0), (-1.0, 0.0));
        assert_eq!(givens(0.0, 3.0), (0.0, 1.0));
        assert_eq!(givens(0.0, -3.0), (0.0, -1.0));
        assert_eq!(givens(0.0, 0.0), (1.0, 0.0));
    }

    #[test]
    fn add_then_remove_last_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_gram(&mut rng, 30, 7);
        let sub = DenseMatrix::from_fn(6, 6, |i, j| g[(i, j)]);
        let r = cholesky(&sub).unwrap();
        let new_col: Vec<f64> = (0..7).map(|i| g[(i, 6)]).collect();
        let back = chol_remove_column(&chol_add_column(&r, &new_col).unwrap(), 6).unwrap();
        assert!(back.max_abs_diff(&r) < 1e-10);
    }
}
