//! Constant mean curvature `H = 1/2` horizontal graphs in the homogeneous space
//! PSL~2(R, tau).
//!
//! - [`geometry`]: metric, orthonormal frame, connection and bracket tables.
//! - [`graph`]: fundamental forms, mean curvature and Laplace–Beltrami formulas for
//!   graphs `y = f(x, t)`.
//! - [`solver`]: the barrier Dirichlet problem on an annulus, solved by iterating
//!   the frozen-coefficient operator.
//! - [`checks`]: the identity and invariant suites behind `check-geometry` and
//!   `check-identities`.
//! - [`cli`]: command-line front end.

pub mod checks;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod solver;

pub use error::{Error, Result};
