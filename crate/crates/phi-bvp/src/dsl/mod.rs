//! Problem definition language: expressions for the right-hand sides and the
//! sectioned problem file format.

pub mod expr;
pub mod problem;

pub use expr::{parse_expression, EvalError, Expr, ParseError};
pub use problem::{load_problem, load_problem_str, LoadError};
