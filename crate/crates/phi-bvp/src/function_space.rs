//! Discretization of [0, T]: uniform grid, sampled C^1 functions, cumulative
//! trapezoid quadrature, and the linear operators H, Q, P together with the
//! Nemytskii substitution operator.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform grid t_i = i T / n, i = 0..=n.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    t_end: f64,
    n: usize,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(t_end: f64, n: usize) -> Self {
        assert!(t_end > 0.0, "horizon T must be positive, got {t_end}");
        assert!(n >= 2, "grid needs at least 2 intervals, got {n}");
        let nodes = (0..=n).map(|i| i as f64 * t_end / n as f64).collect();
        Self { t_end, n, nodes }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of intervals; there are n + 1 nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }
}

/// A discretized C^1 function: value and derivative samples on a grid.
#[derive(Clone, Debug)]
pub struct C1GridFunction {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl C1GridFunction {
    pub fn new(grid: Grid, u: Vec<f64>, du: Vec<f64>) -> Self {
        assert_eq!(u.len(), grid.n() + 1, "value track length mismatch");
        assert_eq!(du.len(), grid.n() + 1, "derivative track length mismatch");
        Self { grid, u, du }
    }

    pub fn zero(grid: Grid) -> Self {
        let len = grid.n() + 1;
        Self::new(grid, vec![0.0; len], vec![0.0; len])
    }

    /// Build from closures for u and u'.
    pub fn sample(grid: Grid, u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) -> Self {
        let uv = grid.nodes().iter().map(|&t| u(t)).collect();
        let dv = grid.nodes().iter().map(|&t| du(t)).collect();
        Self::new(grid, uv, dv)
    }

    /// Build a consistent pair from an initial value and derivative samples:
    /// u_i = u0 + cumulative trapezoid of du.
    pub fn from_derivative(grid: Grid, u0: f64, du: Vec<f64>) -> Self {
        let vals = integrate_h(&grid, &du);
        let u = vals.iter().map(|&v| u0 + v).collect();
        Self::new(grid, u, du)
    }
}

/// f(t, x, y), continuous by assumption.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
}

impl ScalarField {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _, _| c)
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.f)(t, x, y)
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarField(..)")
    }
}

/// N_f(u)_i = f(t_i, u_i, u'_i).
pub fn nemytskii(f: &ScalarField, v: &C1GridFunction) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(v.u.len());
    for (i, &t) in v.grid.nodes().iter().enumerate() {
        let w = f.eval(t, v.u[i], v.du[i]);
        if !w.is_finite() {
            return Err(Error::NonFinite {
                index: i,
                t,
                value: w,
            });
        }
        out.push(w);
    }
    Ok(out)
}

/// Cumulative composite trapezoid: H(v)_0 = 0,
/// H(v)_{i+1} = H(v)_i + (h/2)(v_i + v_{i+1}).
pub fn integrate_h(grid: &Grid, v: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), grid.n() + 1);
    let h = grid.step();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..grid.n() {
        acc += 0.5 * h * (v[i] + v[i + 1]);
        out.push(acc);
    }
    out
}

/// Mean value Q(v) = H(v)(T) / T.
pub fn mean_q(grid: &Grid, v: &[f64]) -> f64 {
    let cum = integrate_h(grid, v);
    cum[grid.n()] / grid.t_end()
}

/// P(u) = u(0).
pub fn eval_p(v: &C1GridFunction) -> f64 {
    v.u[0]
}

/// The C^1 norm ||u||_1 = max|u_i| + max|u'_i|.
pub fn norm_c1(v: &C1GridFunction) -> f64 {
    let sup = |xs: &[f64]| xs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    sup(&v.u) + sup(&v.du)
}

/// L^1 norm of the negative part: integral of max(-v, 0).
pub fn neg_part_l1(grid: &Grid, v: &[f64]) -> f64 {
    let neg: Vec<f64> = v.iter().map(|&x| (-x).max(0.0)).collect();
    let cum = integrate_h(grid, &neg);
    cum[grid.n()]
}

/// L^1 norm by trapezoid of |v|.
pub fn abs_l1(grid: &Grid, v: &[f64]) -> f64 {
    let a: Vec<f64> = v.iter().map(|&x| x.abs()).collect();
    let cum = integrate_h(grid, &a);
    cum[grid.n()]
}
