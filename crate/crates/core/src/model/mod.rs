//! The BVSR statistical kernel.
//!
//! With `μ` and `τ` integrated out under Jeffreys priors, the marginal
//! likelihood of `(γ, h)` factors as `Z(γ, h) · L(y, γ, h)` where
//!
//! ```text
//! Ω = X_γᵗX_γ + σ_β⁻² I
//! Z = |Ω|^{-1/2} σ_β^{-|γ|}
//! L = (y_ss − yᵗX_γ Ω⁻¹ X_γᵗy)^{-n/2}
//! ```
//!
//! `L` only needs the solution of one penalized system, which is what ICF
//! provides. `Z` needs a determinant and is kept for oracles and reporting;
//! the sampler never evaluates it.

mod data;
mod likelihood;
mod prior;
mod rao_blackwell;
mod state;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::solvers::SolverError;

pub use data::{center_columns, Dataset};
pub use likelihood::{log_bayes_factor, log_l, log_z, log_z_calls, posterior_mean_beta};
pub use prior::{log_prior_gamma, sigma_beta_sq, sigma_beta_sq_from_sum, Hyperpriors};
pub use rao_blackwell::{rao_blackwell_all, rao_blackwell_pip, RbEstimate};
pub use state::ModelState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("the model is empty")]
    EmptyModel,
    #[error("heritability {0} outside its admissible range")]
    HOutOfRange(f64),
    #[error("residual sum of squares is not positive ({0})")]
    NonPositiveResidual(f64),
    #[error("model size {size} exceeds the cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("covariate {0} cannot enter the model")]
    UnusableCovariate(usize),
    #[error("covariate {0} is already in the model")]
    AlreadyIncluded(usize),
    #[error("covariate {0} is not in the model")]
    NotIncluded(usize),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
