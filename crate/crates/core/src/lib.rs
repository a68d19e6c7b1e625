//! Iterative complex factorization (ICF) for penalized linear systems
//! `(RᵗR + Σ²)β = z`, and a Bayesian variable selection regression sampler
//! built on it.
//!
//! * [`linalg`]: Cholesky factors, complex triangular substitution, column
//!   add/remove updates.
//! * [`solvers`]: ICF with adaptive relaxation, plus direct, Jacobi,
//!   Gauss-Seidel, SOR, steepest descent, CG and the dual-variable solve.
//! * [`model`]: priors, the `σ_β²(γ, h)` map, Bayes factors and the
//!   likelihood split used by the exchange algorithm.
//! * [`mcmc`]: the sampler.
//! * [`sim`]: synthetic designs and phenotypes, the solver benchmark, and
//!   evaluation metrics.

pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod sim;
pub mod solvers;
