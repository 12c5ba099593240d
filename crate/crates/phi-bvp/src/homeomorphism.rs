//! Increasing homeomorphisms phi: R -> R (or R -> (-a, a)) with phi(0) = 0,
//! their inverses, and the boundary map B(x) = phi(b x) - phi(x).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance for closed-form inverses.
pub const TOL_INV_CLOSED: f64 = 1e-12;
/// Relative tolerance for bisection/secant inverses.
pub const TOL_INV_ITER: f64 = 1e-10;

/// Bracket expansion cap: 2^60.
const BRACKET_CAP: f64 = (1u64 << 60) as f64;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Identity,
    /// phi(s) = |s|^(p-2) s, p > 1. p = 4 is the cubic.
    PLaplacian { p: f64 },
    /// phi(s) = a tanh(s), range (-a, a).
    BoundedTanh { a: f64 },
    Custom {
        forward: ScalarFn,
        inverse: Option<ScalarFn>,
        range: (f64, f64),
        odd: bool,
        /// Sign normalization: +1 if the user map is increasing, -1 if
        /// decreasing. Internally we always invert an increasing map.
        direction: f64,
    },
}

/// A strictly monotone homeomorphism with phi(0) = 0.
#[derive(Clone)]
pub struct Homeomorphism {
    kind: Kind,
}

impl fmt::Debug for Homeomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Identity => write!(f, "Homeomorphism::identity"),
            Kind::PLaplacian { p } => write!(f, "Homeomorphism::p_laplacian({p})"),
            Kind::BoundedTanh { a } => write!(f, "Homeomorphism::bounded_tanh({a})"),
            Kind::Custom { range, odd, .. } => {
                write!(f, "Homeomorphism::custom(range {range:?}, odd {odd})")
            }
        }
    }
}

impl Homeomorphism {
    pub fn identity() -> Self {
        Self {
            kind: Kind::Identity,
        }
    }

    /// phi(s) = |s|^(p-2) s with p > 1.
    pub fn p_laplacian(p: f64) -> Self {
        assert!(p > 1.0, "p-Laplacian exponent must satisfy p > 1, got {p}");
        Self {
            kind: Kind::PLaplacian { p },
        }
    }

    /// phi(s) = a tanh(s), a bounded homeomorphism onto (-a, a).
    pub fn bounded_tanh(a: f64) -> Self {
        assert!(a > 0.0, "bounded_tanh scale must be positive, got {a}");
        Self {
            kind: Kind::BoundedTanh { a },
        }
    }

    /// A user-supplied strictly monotone map with phi(0) = 0.
    ///
    /// `range` is the open interval of attainable values (use infinities for
    /// surjective maps). Monotonicity direction is probed at construction;
    /// decreasing maps are accepted and normalized internally.
    pub fn custom(
        forward: ScalarFn,
        inverse: Option<ScalarFn>,
        range: (f64, f64),
        odd: bool,
    ) -> Self {
        let at0 = forward(0.0);
        assert!(
            at0.abs() <= 1e-12,
            "custom homeomorphism must satisfy phi(0) = 0, got phi(0) = {at0}"
        );
        let direction = if forward(1.0) > forward(-1.0) { 1.0 } else { -1.0 };
        Self {
            kind: Kind::Custom {
                forward,
                inverse,
                range,
                odd,
                direction,
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Identity => x,
            Kind::PLaplacian { p } => {
                if x == 0.0 {
                    0.0
                } else {
                    x.abs().powf(p - 2.0) * x
                }
            }
            Kind::BoundedTanh { a } => a * x.tanh(),
            Kind::Custom { forward, .. } => forward(x),
        }
    }

    /// Open interval of attainable values.
    pub fn range(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Identity | Kind::PLaplacian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Kind::BoundedTanh { a } => (-a, *a),
            Kind::Custom { range, .. } => *range,
        }
    }

    /// Whether phi(-x) = -phi(x) holds.
    pub fn is_odd(&self) -> bool {
        match &self.kind {
            Kind::Identity | Kind::PLaplacian { .. } | Kind::BoundedTanh { .. } => true,
            Kind::Custom { odd, .. } => *odd,
        }
    }

    /// Whether the map as supplied is increasing.
    pub fn is_increasing(&self) -> bool {
        match &self.kind {
            Kind::Custom { direction, .. } => *direction > 0.0,
            _ => true,
        }
    }

    /// phi^{-1}(z). Closed forms where available, otherwise expanding-bracket
    /// bisection refined by secant steps.
    pub fn invert(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(z > lo && z < hi) && z != 0.0 {
            return Err(Error::OutsideRange { value: z, lo, hi });
        }
        match &self.kind {
            Kind::Identity => Ok(z),
            Kind::PLaplacian { p } => {
                if z == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(z.abs().powf(1.0 / (p - 1.0)) * z.signum())
                }
            }
            Kind::BoundedTanh { a } => Ok((z / a).atanh()),
            Kind::Custom {
                forward,
                inverse,
                direction,
                ..
            } => {
                if let Some(inv) = inverse {
                    return Ok(inv(z));
                }
                let dir = *direction;
                invert_monotone(|x| dir * forward(x), dir * z)
            }
        }
    }
}

/// Invert a strictly increasing scalar map by expanding-bracket bisection
/// with a secant polish. The bracket starts at [-1, 1] and doubles until it
/// encloses the target; the cap signals that the target is unattainable.
pub fn invert_monotone<F: Fn(f64) -> f64>(g: F, z: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) > z {
        lo *= 2.0;
        if lo.abs() > BRACKET_CAP {
            return Err(Error::BracketFailed { cap: BRACKET_CAP });
        }
    }
    while g(hi) < z {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::BracketFailed { cap: BRACKET_CAP });
        }
    }
    let mut flo = g(lo) - z;
    let mut fhi = g(hi) - z;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    // Bisect until the bracket is tight, then polish with secant steps kept
    // inside the bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = g(mid) - z;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if (fmid < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
        if hi - lo <= TOL_INV_ITER * 0.01 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let mut x = if fhi != flo {
        let s = lo - flo * (hi - lo) / (fhi - flo);
        if s > lo && s < hi {
            s
        } else {
            0.5 * (lo + hi)
        }
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..3 {
        let fx = g(x) - z;
        if fx == 0.0 {
            break;
        }
        let (xa, fa) = if (fx < 0.0) == (flo < 0.0) {
            (hi, fhi)
        } else {
            (lo, flo)
        };
        if fa == fx {
            break;
        }
        let next = x - fx * (xa - x) / (fa - fx);
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// The boundary coupling B(x) = phi(b x) - phi(x) for the condition
/// u'(T) = b u'(0).
#[derive(Clone, Debug)]
pub struct BoundaryMap {
    pub phi: Homeomorphism,
    pub b: f64,
    pub t_end: f64,
}

impl BoundaryMap {
    pub fn new(phi: Homeomorphism, b: f64, t_end: f64) -> Self {
        assert!(b != 0.0, "boundary parameter b must be nonzero");
        assert!(t_end > 0.0, "horizon T must be positive, got {t_end}");
        Self { phi, b, t_end }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.phi.eval(self.b * x) - self.phi.eval(x)
    }

    /// B^{-1}(z), defined only for b < 0 where phi(b .) and -phi(.) are
    /// simultaneously monotone, making B strictly monotone.
    pub fn invert(&self, z: f64) -> Result<f64> {
        if self.b >= 0.0 {
            return Err(Error::NotInjective { b: self.b });
        }
        // For b = -1 and odd phi, B(x) = -2 phi(x) exactly.
        if self.b == -1.0 && self.phi.is_odd() {
            return self.phi.invert(-0.5 * z);
        }
        // B is decreasing when phi is increasing (and vice versa); invert the
        // increasing reflection.
        let sign = if self.eval(1.0) < self.eval(-1.0) {
            -1.0
        } else {
            1.0
        };
        let x = invert_monotone(|x| sign * self.eval(x), sign * z).map_err(|e| match e {
            Error::BracketFailed { .. } => {
                let m = 2.0 * self.phi.range().1.abs().min(f64::MAX);
                Error::OutsideRange {
                    value: z,
                    lo: -m,
                    hi: m,
                }
            }
            other => other,
        })?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Vec<f64> {
        let mut xs = Vec::new();
        let mut x = 1e-3;
        while x < 1e3 {
            xs.push(x);
            xs.push(-x);
            x *= 3.7;
        }
        xs.push(0.0);
        xs
    }

    #[test]
    fn eval_examples() {
        let cubic = Homeomorphism::p_laplacian(4.0);
        assert_eq!(cubic.eval(2.0), 8.0);
        assert_eq!(cubic.eval(-1.0), -1.0);
        assert_eq!(Homeomorphism::identity().eval(-3.5), -3.5);
        assert_eq!(cubic.eval(0.0), 0.0);
    }

    #[test]
    fn invert_examples() {
        let cubic = Homeomorphism::p_laplacian(4.0);
        assert!((cubic.invert(8.0).unwrap() - 2.0).abs() <= TOL_INV_CLOSED * 3.0);
        assert!((cubic.invert(3.0).unwrap() - 3f64.cbrt()).abs() <= TOL_INV_CLOSED * 2.0);
        let tanh_like = Homeomorphism::custom(
            Arc::new(|x: f64| x.tanh()),
            None,
            (-1.0, 1.0),
            true,
        );
        assert_eq!(tanh_like.invert(0.0).unwrap(), 0.0);
    }

    #[test]
    fn round_trip_on_lattice() {
        for phi in [
            Homeomorphism::identity(),
            Homeomorphism::p_laplacian(4.0),
            Homeomorphism::p_laplacian(2.5),
        ] {
            for &x in &lattice() {
                let x_back = phi.invert(phi.eval(x)).unwrap();
                assert!(
                    (x_back - x).abs() <= TOL_INV_CLOSED * (1.0 + x.abs()),
                    "round trip failed at {x}: got {x_back}"
                );
            }
        }
    }

    #[test]
    fn custom_without_inverse_round_trips() {
        let phi = Homeomorphism::custom(
            Arc::new(|x: f64| x + x.powi(3)),
            None,
            (f64::NEG_INFINITY, f64::INFINITY),
            true,
        );
        for &x in &lattice() {
            if x.abs() > 1e4 {
                continue;
            }
            let x_back = phi.invert(phi.eval(x)).unwrap();
            assert!(
                (x_back - x).abs() <= TOL_INV_ITER * (1.0 + x.abs()),
                "custom round trip failed at {x}: got {x_back}"
            );
        }
    }

    #[test]
    fn decreasing_custom_is_normalized() {
        let phi = Homeomorphism::custom(
            Arc::new(|x: f64| -x),
            None,
            (f64::NEG_INFINITY, f64::INFINITY),
            true,
        );
        assert!(!phi.is_increasing());
        assert!((phi.invert(2.0).unwrap() + 2.0).abs() <= 1e-10);
    }

    #[test]
    fn monotone_strictly_increasing() {
        let phi = Homeomorphism::p_laplacian(3.0);
        let xs = lattice();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            assert!(phi.eval(w[0]) < phi.eval(w[1]));
        }
    }

    #[test]
    fn odd_symmetry() {
        for phi in [
            Homeomorphism::p_laplacian(4.0),
            Homeomorphism::bounded_tanh(2.0),
        ] {
            for &x in &lattice() {
                assert!((phi.eval(-x) + phi.eval(x)).abs() <= 1e-12 * (1.0 + phi.eval(x).abs()));
            }
        }
    }

    #[test]
    fn bounded_outside_range_errors() {
        let phi = Homeomorphism::bounded_tanh(1.0);
        match phi.invert(1.5) {
            Err(Error::OutsideRange { .. }) => {}
            other => panic!("expected OutsideRange, got {other:?}"),
        }
    }

    #[test]
    fn boundary_map_examples() {
        let bm = BoundaryMap::new(Homeomorphism::identity(), -1.0, 1.0);
        assert_eq!(bm.eval(3.0), -6.0);
        let bm = BoundaryMap::new(Homeomorphism::p_laplacian(4.0), 1.0, 1.0);
        assert_eq!(bm.eval(1.7), 0.0);
        let bm = BoundaryMap::new(Homeomorphism::p_laplacian(4.0), -2.0, 1.0);
        assert_eq!(bm.eval(1.0), -9.0);
    }

    #[test]
    fn boundary_map_inverse_examples() {
        let bm = BoundaryMap::new(Homeomorphism::identity(), -1.0, 1.0);
        assert!((bm.invert(-6.0).unwrap() - 3.0).abs() <= 1e-10);
        assert!((bm.invert(2.0).unwrap() + 1.0).abs() <= 1e-10);
        let bm = BoundaryMap::new(Homeomorphism::p_laplacian(4.0), -1.0, 1.0);
        assert_eq!(bm.invert(0.0).unwrap(), 0.0);
    }

    #[test]
    fn boundary_map_inverse_requires_negative_b() {
        let bm = BoundaryMap::new(Homeomorphism::identity(), 1.0, 1.0);
        match bm.invert(0.5) {
            Err(Error::NotInjective { .. }) => {}
            other => panic!("expected NotInjective, got {other:?}"),
        }
    }

    #[test]
    fn boundary_round_trip_for_negative_b() {
        for b in [-1.0, -0.5, -2.0] {
            let bm = BoundaryMap::new(Homeomorphism::p_laplacian(3.0), b, 1.0);
            for &x in &lattice() {
                if x.abs() > 100.0 {
                    continue;
                }
                let x_back = bm.invert(bm.eval(x)).unwrap();
                assert!(
                    (x_back - x).abs() <= TOL_INV_ITER * (1.0 + x.abs()),
                    "B round trip failed at b={b}, x={x}: got {x_back}"
                );
            }
        }
    }

    #[test]
    fn odd_phi_b_minus_one_identity() {
        let phi = Homeomorphism::p_laplacian(4.0);
        let bm = BoundaryMap::new(phi.clone(), -1.0, 1.0);
        for &x in &lattice() {
            let lhs = bm.eval(x);
            let rhs = -2.0 * phi.eval(x);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn decreasing_boundary_map_for_negative_b() {
        let bm = BoundaryMap::new(Homeomorphism::p_laplacian(4.0), -2.0, 1.0);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let x = -5.0 + 0.2 * i as f64;
            let v = bm.eval(x);
            assert!(v < prev);
            prev = v;
        }
    }
}
