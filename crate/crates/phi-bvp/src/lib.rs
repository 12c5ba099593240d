//! Solver library for nonlinear boundary value problems of the form
//!
//! ```text
//! (phi(u'))' = f(t, u, u'),   u'(0) = u(0),   u'(T) = b u'(0),
//! ```
//!
//! where phi is an increasing homeomorphism with phi(0) = 0. The problem is
//! reduced to a fixed-point equation in C^1; existence is certified either by
//! a nonzero Brouwer degree of a reduced planar map on a disc sized by
//! explicit a priori bounds, or (for b < 0) by a self-mapped ball of the
//! direct inverse operator. Problems are described in a small text format
//! with an arithmetic expression language; see the `dsl` module and the CLI.

pub mod bounds;
pub mod cli;
pub mod degree;
pub mod dsl;
pub mod error;
pub mod function_space;
pub mod homeomorphism;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
pub use function_space::{C1GridFunction, Grid, ScalarField};
pub use homeomorphism::{BoundaryMap, Homeomorphism};
pub use operators::{ProblemSpec, Residual, TimeField};
pub use solver::{
    solve, solve_homotopy, solve_schauder, verify, Certificate, SolveError, SolveReport,
    SolverConfig, SolverMode, Tolerances,
};
