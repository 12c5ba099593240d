//! Brouwer degree of a planar map on a disc, computed as the winding number
//! of the boundary image about the origin with adaptive angular subdivision.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function_space::{Grid, ScalarField};
use crate::operators::ProblemSpec;

/// A continuous map R^2 -> R^2.
#[derive(Clone)]
pub struct PlanarMap {
    g: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
}

impl PlanarMap {
    pub fn new(g: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self { g: Arc::new(g) }
    }

    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        (self.g)(x, y)
    }
}

impl std::fmt::Debug for PlanarMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PlanarMap(..)")
    }
}

/// A degree query on the disc of radius `radius` about `center`.
#[derive(Clone, Debug)]
pub struct DegreeQuery {
    pub center: (f64, f64),
    pub radius: f64,
    /// Minimum allowed |G| on the boundary; `None` selects the scale-aware
    /// default 1e-9 (1 + max |G| over the initial samples).
    pub eps_boundary: Option<f64>,
    /// Budget for adaptive boundary samples.
    pub max_points: usize,
    /// Number of initial equispaced boundary samples.
    pub initial_points: usize,
    /// Angle at which the traversal starts (the degree must not depend on it).
    pub start_angle: f64,
}

impl DegreeQuery {
    pub fn disc(center: (f64, f64), radius: f64) -> Self {
        assert!(radius > 0.0, "disc radius must be positive");
        Self {
            center,
            radius,
            eps_boundary: None,
            max_points: 1 << 20,
            initial_points: 64,
            start_angle: 0.0,
        }
    }
}

#[derive(Clone, Copy)]
struct Sample {
    angle: f64,
    theta: f64,
    mag: f64,
}

/// Winding number of the boundary image of `query`'s disc under `map` about
/// the origin, traversed counterclockwise. Adaptive subdivision enforces
/// |delta theta| < pi/2 between consecutive samples, which pins the integer
/// unambiguously.
pub fn brouwer_degree(map: &PlanarMap, query: &DegreeQuery) -> Result<i32> {
    let (cx, cy) = query.center;
    let r = query.radius;
    let probe = |angle: f64| -> Result<Sample> {
        let (gx, gy) = map.eval(cx + r * angle.cos(), cy + r * angle.sin());
        let mag = gx.hypot(gy);
        if !mag.is_finite() {
            return Err(Error::NonFinite {
                index: 0,
                t: angle,
                value: mag,
            });
        }
        Ok(Sample {
            angle,
            theta: gy.atan2(gx),
            mag,
        })
    };

    let m = query.initial_points.max(4);
    let mut initial = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let angle = query.start_angle + 2.0 * PI * k as f64 / m as f64;
        initial.push(probe(angle)?);
    }
    let max_mag = initial.iter().fold(0.0f64, |acc, s| acc.max(s.mag));
    let eps = query.eps_boundary.unwrap_or(1e-9 * (1.0 + max_mag));
    let check = |s: &Sample| -> Result<()> {
        if s.mag < eps {
            Err(Error::ZeroOnBoundary {
                magnitude: s.mag,
                threshold: eps,
                angle: s.angle,
            })
        } else {
            Ok(())
        }
    };
    for s in &initial {
        check(s)?;
    }

    let mut points = m + 1;
    let mut total = 0.0f64;
    // Stack of segments still to be accumulated, in reverse traversal order.
    let mut stack: Vec<(Sample, Sample)> = initial
        .windows(2)
        .rev()
        .map(|w| (w[0], w[1]))
        .collect();
    while let Some((a, b)) = stack.pop() {
        let mut d = b.theta - a.theta;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        if d.abs() < PI / 2.0 {
            total += d;
            continue;
        }
        if points >= query.max_points {
            return Err(Error::BudgetExceeded {
                max_points: query.max_points,
            });
        }
        let mid = probe(0.5 * (a.angle + b.angle))?;
        check(&mid)?;
        points += 1;
        stack.push((mid, b));
        stack.push((a, mid));
    }

    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    debug_assert!(
        (winding - rounded).abs() < 0.25,
        "winding accumulation drifted: {winding}"
    );
    Ok(rounded as i32)
}

/// The reduced planar map G(x, y) =
/// (B(x)/T - (1/T) int_0^T f(t, x + y t, y) dt, -x + y), using the
/// identification of (x, y) with the related function x + y t.
pub fn build_g(spec: &ProblemSpec, grid: &Grid) -> PlanarMap {
    let bm = spec.boundary_map();
    let f: ScalarField = spec.f.clone();
    let grid = grid.clone();
    let t_end = spec.t_end;
    PlanarMap::new(move |x, y| {
        // trapezoid mean of f along the affine candidate
        let h = grid.step();
        let n = grid.n();
        let mut acc = 0.0;
        for i in 0..=n {
            let t = grid.node(i);
            let w = f.eval(t, x + y * t, y);
            let coeff = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += coeff * w;
        }
        let mean = acc * h / t_end;
        (bm.eval(x) / t_end - mean, -x + y)
    })
}
