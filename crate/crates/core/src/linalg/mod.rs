//! Dense real/complex triangular algebra.

mod cholesky;
mod complex;
mod matrix;
pub mod opcount;
mod triangular;

use thiserror::Error;

pub use cholesky::{chol_add_column, chol_remove_column, cholesky, givens, PIVOT_TOL};
pub use complex::{skew_matrix, skew_mul_vec, ComplexTriangularPair, PenaltyDiag};
pub use matrix::{dot, max_abs, max_abs_diff, norm2, DenseMatrix, Scalar};
pub use triangular::{backward_sub, forward_sub, UpperTriangular};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("zero on the diagonal at index {index}")]
    SingularDiagonal { index: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("nonzero entry below the diagonal at ({row}, {col})")]
    NotTriangular { row: usize, col: usize },
    #[error("penalty entry {index} must be positive and finite, got {value}")]
    NonPositivePenalty { index: usize, value: f64 },
}
