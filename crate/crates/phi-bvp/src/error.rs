//! Error types shared by the numeric layers.

use thiserror::Error;

/// Errors raised by homeomorphism inversion, operator application and the
/// degree engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A value to invert lies outside the image of the homeomorphism (or of
    /// the boundary map). Only bounded kinds can produce this.
    #[error("value {value} is outside the attainable range ({lo}, {hi})")]
    OutsideRange { value: f64, lo: f64, hi: f64 },

    /// The boundary map B(x) = phi(b x) - phi(x) is only invertible for b < 0.
    #[error("boundary map is not injective for b = {b} (requires b < 0)")]
    NotInjective { b: f64 },

    /// A pointwise evaluation produced NaN or an infinity.
    #[error("non-finite value at node {index} (t = {t}): {value}")]
    NonFinite { index: usize, t: f64, value: f64 },

    /// |G| dropped below the boundary threshold while accumulating the
    /// winding number; the degree is undefined on this disc.
    #[error("map magnitude {magnitude} below threshold {threshold} on the boundary (angle {angle} rad)")]
    ZeroOnBoundary {
        magnitude: f64,
        threshold: f64,
        angle: f64,
    },

    /// Adaptive subdivision of the boundary exceeded its sample budget.
    #[error("winding subdivision exceeded {max_points} boundary samples")]
    BudgetExceeded { max_points: usize },

    /// Bracket expansion for a monotone inverse hit its cap without a sign
    /// change.
    #[error("bracket expansion reached {cap} without enclosing the target")]
    BracketFailed { cap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
