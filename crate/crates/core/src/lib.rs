//! Solvers for singular algebraic equations given through empirical
//! data.
//!
//! Equations whose Jacobians are rank-deficient at the intended solution
//! defeat plain Newton iteration, and their solutions can be altered or
//! erased entirely by data perturbations. The engine here iterates with
//! the Moore–Penrose inverse of the rank-r *projection* of the Jacobian,
//! which converges quadratically to nonisolated zeros on exact data and,
//! on perturbed data, to a stationary point that approximates the exact
//! solution to within the order of the data error.
//!
//! On top of the engine sit application solvers:
//!
//! - [`linsolve`] — singular/rank-deficient linear systems: the general
//!   solution as a particular point plus a kernel basis, with error
//!   bounds.
//! - [`gcd`] — numerical polynomial GCD via the equation
//!   `(u v - p, u w - q) = 0`.
//! - [`factor`] — refinement of a structured polynomial factorization
//!   `u_0 u_1^{l_1} ... u_k^{l_k} = p`.
//! - [`eig`] — defective eigenvalues with a given multiplicity support
//!   via `A X - λ X - X S = 0`.
//! - [`deflate`] — depth-deflation for ultrasingular zeros.
//!
//! The [`cli`] module exposes all of it as the `singeq` command-line
//! tool.

pub mod cfmt;
pub mod cli;
pub mod deflate;
pub mod eig;
pub mod error;
pub mod factor;
pub mod gcd;
pub mod linalg;
pub mod linsolve;
pub mod mapping;
pub mod newton;
pub mod poly;

pub use error::{Error, Result};
pub use linalg::{
    numerical_rank, rank_r_project, subspace_distance, svd, thin_qr, ComplexMatrix,
    RankRProjection, SvdFactors,
};
pub use mapping::{LayoutComponent, MappingHandle, Point, Value, VectorSpaceLayout};
pub use newton::{
    condition_estimate, rank_r_newton, IterationTrace, NewtonOptions, NewtonStatus,
};
pub use poly::{parse_poly, MonomialSupport, SparsePoly};
