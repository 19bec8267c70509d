//! Numerical Kolmogorov superposition: Sprecher/Köppen inner functions,
//! Bell-polynomial Taylor expansion of the superposition, and the reduction
//! of the 2-D Poisson problem to a one-dimensional boundary value problem
//! solved by Newton iteration.

pub mod bvp_solver;
pub mod combinatorics;
pub mod error;
pub mod kst_inner;
pub mod poisson;
pub mod taylor_rep;

pub use error::{KstError, Result};
pub use kst_inner::{build_grid, build_psi, compute_constants, z_map, GridD, KstParams, PsiTable};
pub use combinatorics::{bell_polynomial, enumerate_partitions, faa_di_bruno, DerivativeJet, MultiIndex};
pub use taylor_rep::{taylor_kst_eval, OuterFunctionSet, PolynomialOuter, TaylorConfig};
