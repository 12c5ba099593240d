//! The fixed-point operators associated with the boundary value problem
//! (phi(u'))' = f(t, u, u'), u'(0) = u(0), u'(T) = b u'(0):
//! the operator M1, its homotopy family M(lambda, .), the auxiliary homotopy
//! Z(lambda, .) and, for b < 0, the direct inverse Gamma.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function_space::{
    integrate_h, mean_q, nemytskii, C1GridFunction, Grid, ScalarField,
};
use crate::homeomorphism::{BoundaryMap, Homeomorphism};

/// A function of t alone, used for the envelopes h (|f| <= h) and c (f >= c).
#[derive(Clone)]
pub struct TimeField {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TimeField {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn samples(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().iter().map(|&t| self.eval(t)).collect()
    }
}

impl std::fmt::Debug for TimeField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TimeField(..)")
    }
}

/// A full problem instance: the homeomorphism, the boundary parameter, the
/// horizon, the right-hand side and the optional hypothesis data.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub phi: Homeomorphism,
    pub b: f64,
    pub t_end: f64,
    pub f: ScalarField,
    /// Dominating envelope: |f(t,x,y)| <= h(t) for all (x, y).
    pub h: Option<TimeField>,
    /// Lower envelope: f(t,x,y) >= c(t) for all (x, y).
    pub c: Option<TimeField>,
    /// The sign-hypothesis window M1 < M2.
    pub m_window: Option<(f64, f64)>,
    /// Degree disc radius override.
    pub rho: Option<f64>,
}

impl ProblemSpec {
    pub fn new(phi: Homeomorphism, b: f64, t_end: f64, f: ScalarField) -> Self {
        assert!(b != 0.0, "boundary parameter b must be nonzero");
        assert!(t_end > 0.0, "horizon T must be positive");
        Self {
            phi,
            b,
            t_end,
            f,
            h: None,
            c: None,
            m_window: None,
            rho: None,
        }
    }

    pub fn with_h(mut self, h: TimeField) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_c(mut self, c: TimeField) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_m_window(mut self, m1: f64, m2: f64) -> Self {
        assert!(m1 < m2, "window requires M1 < M2, got {m1} >= {m2}");
        self.m_window = Some((m1, m2));
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        assert!(rho > 0.0, "disc radius must be positive");
        self.rho = Some(rho);
        self
    }

    pub fn boundary_map(&self) -> BoundaryMap {
        BoundaryMap::new(self.phi.clone(), self.b, self.t_end)
    }
}

/// M1(u): derivative track phi^{-1}[phi(u(0)) + H(N_f u - Q N_f u) + t B/T],
/// value track (Q N_f u - B/T) + u(0) + H(derivative track).
pub fn apply_m1(spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> Result<C1GridFunction> {
    let w = nemytskii(&spec.f, u)?;
    let q = mean_q(grid, &w);
    let u0 = u.u[0];
    let beta = spec.boundary_map().eval(u0);
    let wq: Vec<f64> = w.iter().map(|&x| x - q).collect();
    let hwq = integrate_h(grid, &wq);
    let phi_u0 = spec.phi.eval(u0);
    let t_end = spec.t_end;
    let mut dv = Vec::with_capacity(w.len());
    for (i, &t) in grid.nodes().iter().enumerate() {
        dv.push(spec.phi.invert(phi_u0 + hwq[i] + t * beta / t_end)?);
    }
    Ok(C1GridFunction::from_derivative(
        grid.clone(),
        (q - beta / t_end) + u0,
        dv,
    ))
}

/// The homotopy family M(lambda, u): the H(N_f u - Q N_f u) term is scaled
/// by lambda; M(1, .) coincides with M1.
pub fn apply_m_lambda(
    spec: &ProblemSpec,
    grid: &Grid,
    lambda: f64,
    u: &C1GridFunction,
) -> Result<C1GridFunction> {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
    let w = nemytskii(&spec.f, u)?;
    let q = mean_q(grid, &w);
    let u0 = u.u[0];
    let beta = spec.boundary_map().eval(u0);
    let wq: Vec<f64> = w.iter().map(|&x| x - q).collect();
    let hwq = integrate_h(grid, &wq);
    let phi_u0 = spec.phi.eval(u0);
    let t_end = spec.t_end;
    let mut dv = Vec::with_capacity(w.len());
    for (i, &t) in grid.nodes().iter().enumerate() {
        dv.push(spec.phi.invert(phi_u0 + lambda * hwq[i] + t * beta / t_end)?);
    }
    Ok(C1GridFunction::from_derivative(
        grid.clone(),
        (q - beta / t_end) + u0,
        dv,
    ))
}

/// The auxiliary homotopy Z(lambda, u): derivative track
/// phi^{-1}[lambda t B/T + phi(u(0))]; Z(1, .) = M(0, .).
pub fn apply_z(
    spec: &ProblemSpec,
    grid: &Grid,
    lambda: f64,
    u: &C1GridFunction,
) -> Result<C1GridFunction> {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
    let w = nemytskii(&spec.f, u)?;
    let q = mean_q(grid, &w);
    let u0 = u.u[0];
    let beta = spec.boundary_map().eval(u0);
    let phi_u0 = spec.phi.eval(u0);
    let t_end = spec.t_end;
    let mut dv = Vec::with_capacity(w.len());
    for &t in grid.nodes() {
        dv.push(spec.phi.invert(lambda * t * beta / t_end + phi_u0)?);
    }
    Ok(C1GridFunction::from_derivative(
        grid.clone(),
        u0 + q - beta / t_end,
        dv,
    ))
}

/// Gamma(u) = (D_phi D)^{-1} N_f(u) for b < 0: with S = H(N_f u)(T) and
/// s0 = B^{-1}(S), the derivative track is phi^{-1}[phi(s0) + H(N_f u)] and
/// the value track s0 + H(derivative track). By construction the output
/// satisfies v'(0) = v(0) = s0 and phi(v'(T)) = phi(b s0).
pub fn apply_gamma(spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> Result<C1GridFunction> {
    if spec.b >= 0.0 {
        return Err(Error::NotInjective { b: spec.b });
    }
    let w = nemytskii(&spec.f, u)?;
    let hw = integrate_h(grid, &w);
    let total = hw[grid.n()];
    let bm = spec.boundary_map();
    let s0 = bm.invert(total)?;
    let phi_s0 = spec.phi.eval(s0);
    let mut dv = Vec::with_capacity(w.len());
    for &hwi in &hw {
        dv.push(spec.phi.invert(phi_s0 + hwi)?);
    }
    Ok(C1GridFunction::from_derivative(grid.clone(), s0, dv))
}

/// Residual of a candidate solution: both boundary defects and the max
/// interior defect of the differentiated equation, computed with a centered
/// difference of the sampled phi(u') track (independent of the operators'
/// own integration path).
#[derive(Clone, Copy, Debug)]
pub struct Residual {
    /// |u'(0) - u(0)|
    pub bc1: f64,
    /// |u'(T) - b u'(0)|
    pub bc2: f64,
    /// max over interior nodes of |d/dt phi(u') - f(t, u, u')|
    pub ode: f64,
}

pub fn residual(spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> Residual {
    let n = grid.n();
    let h = grid.step();
    let bc1 = (u.du[0] - u.u[0]).abs();
    let bc2 = (u.du[n] - spec.b * u.du[0]).abs();
    let z: Vec<f64> = u.du.iter().map(|&y| spec.phi.eval(y)).collect();
    let mut ode = 0.0f64;
    for i in 1..n {
        let dzdt = (z[i + 1] - z[i - 1]) / (2.0 * h);
        let fi = spec.f.eval(grid.node(i), u.u[i], u.du[i]);
        let d = (dzdt - fi).abs();
        if !d.is_finite() {
            ode = f64::INFINITY;
            break;
        }
        ode = ode.max(d);
    }
    Residual { bc1, bc2, ode }
}

/// Node-wise ODE defect |d/dt phi(u') - f|: centered differences inside,
/// second-order one-sided stencils at the endpoints.
pub fn node_residuals(spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> Vec<f64> {
    let n = grid.n();
    let h = grid.step();
    let z: Vec<f64> = u.du.iter().map(|&y| spec.phi.eval(y)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let dzdt = if i == 0 {
            (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * h)
        } else if i == n {
            (3.0 * z[n] - 4.0 * z[n - 1] + z[n - 2]) / (2.0 * h)
        } else {
            (z[i + 1] - z[i - 1]) / (2.0 * h)
        };
        out.push((dzdt - spec.f.eval(grid.node(i), u.u[i], u.du[i])).abs());
    }
    out
}

/// Both sides of the boundary identity Q(N_f(u)) = B(u'(0)) / T, which is
/// equivalent to u'(T) = b u'(0).
pub fn remark_identity(spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> Result<(f64, f64)> {
    let w = nemytskii(&spec.f, u)?;
    let q = mean_q(grid, &w);
    let rhs = spec.boundary_map().eval(u.du[0]) / spec.t_end;
    Ok((q, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::norm_c1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_oracle_spec() -> ProblemSpec {
        ProblemSpec::new(
            Homeomorphism::identity(),
            -1.0,
            1.0,
            ScalarField::constant(2.0),
        )
    }

    fn linear_oracle_solution(grid: &Grid) -> C1GridFunction {
        C1GridFunction::sample(grid.clone(), |t| -1.0 - t + t * t, |t| -1.0 + 2.0 * t)
    }

    fn example_spec() -> ProblemSpec {
        ProblemSpec::new(
            Homeomorphism::p_laplacian(4.0),
            1.0,
            1.0,
            ScalarField::new(|_, _, y: f64| y.exp() / 2.0 - 1.0),
        )
    }

    fn random_function(grid: &Grid, rng: &mut impl Rng) -> C1GridFunction {
        let len = grid.n() + 1;
        let u = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let du = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        C1GridFunction::new(grid.clone(), u, du)
    }

    #[test]
    fn m1_fixes_the_linear_oracle() {
        let grid = Grid::new(1.0, 128);
        let spec = linear_oracle_spec();
        let u = linear_oracle_solution(&grid);
        let v = apply_m1(&spec, &grid, &u).unwrap();
        for i in 0..=128 {
            assert!((v.u[i] - u.u[i]).abs() < 1e-12, "value mismatch at {i}");
            assert!((v.du[i] - u.du[i]).abs() < 1e-12, "slope mismatch at {i}");
        }
    }

    #[test]
    fn m1_fixes_zero_when_f_vanishes() {
        let grid = Grid::new(1.0, 32);
        let spec = ProblemSpec::new(
            Homeomorphism::identity(),
            -1.0,
            1.0,
            ScalarField::constant(0.0),
        );
        let v = apply_m1(&spec, &grid, &C1GridFunction::zero(grid.clone())).unwrap();
        assert!(norm_c1(&v) < 1e-15);
    }

    #[test]
    fn m1_of_zero_for_the_cubic_example() {
        // At u = 0 the right-hand side is the constant -1/2, so
        // N_f(u) - Q(N_f(u)) vanishes identically and B(0) = 0: the image is
        // the constant -1/2 with zero slope.
        let grid = Grid::new(1.0, 64);
        let spec = example_spec();
        let v = apply_m1(&spec, &grid, &C1GridFunction::zero(grid.clone())).unwrap();
        assert!((v.u[0] + 0.5).abs() < 1e-14);
        for i in 0..=64 {
            assert!((v.u[i] + 0.5).abs() < 1e-13);
            assert!(v.du[i].abs() < 1e-13);
        }
    }

    #[test]
    fn m_lambda_one_matches_m1_bitwise() {
        let grid = Grid::new(1.0, 64);
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_function(&grid, &mut rng);
            let a = apply_m1(&spec, &grid, &u).unwrap();
            let b = apply_m_lambda(&spec, &grid, 1.0, &u).unwrap();
            assert_eq!(a.u, b.u);
            assert_eq!(a.du, b.du);
        }
    }

    #[test]
    fn m_lambda_zero_fixes_linear_oracle() {
        // f is constant so N_f - Q(N_f) vanishes and lambda is inert.
        let grid = Grid::new(1.0, 64);
        let spec = linear_oracle_spec();
        let u = linear_oracle_solution(&grid);
        let v = apply_m_lambda(&spec, &grid, 0.0, &u).unwrap();
        for i in 0..=64 {
            assert!((v.u[i] - u.u[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn z_one_matches_m_zero() {
        let grid = Grid::new(1.0, 48);
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = random_function(&grid, &mut rng);
            let a = apply_z(&spec, &grid, 1.0, &u).unwrap();
            let b = apply_m_lambda(&spec, &grid, 0.0, &u).unwrap();
            for i in 0..=48 {
                assert!((a.u[i] - b.u[i]).abs() < 1e-13);
                assert!((a.du[i] - b.du[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn z_one_fixes_linear_oracle() {
        let grid = Grid::new(1.0, 64);
        let spec = linear_oracle_spec();
        let u = linear_oracle_solution(&grid);
        let v = apply_z(&spec, &grid, 1.0, &u).unwrap();
        for i in 0..=64 {
            assert!((v.u[i] - u.u[i]).abs() < 1e-12);
            assert!((v.du[i] - u.du[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn z_fixes_zero_when_f_vanishes() {
        let grid = Grid::new(1.0, 32);
        let spec = ProblemSpec::new(
            Homeomorphism::identity(),
            -1.0,
            1.0,
            ScalarField::constant(0.0),
        );
        let v = apply_z(&spec, &grid, 0.5, &C1GridFunction::zero(grid.clone())).unwrap();
        assert!(norm_c1(&v) < 1e-15);
    }

    #[test]
    fn gamma_reproduces_linear_oracle_from_any_input() {
        // f is constant, so Gamma is constant in u: S = 2, s0 = -1,
        // v' = -1 + 2t, v = -1 - t + t^2.
        let grid = Grid::new(1.0, 64);
        let spec = linear_oracle_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let u = random_function(&grid, &mut rng);
            let v = apply_gamma(&spec, &grid, &u).unwrap();
            let target = linear_oracle_solution(&grid);
            for i in 0..=64 {
                assert!((v.u[i] - target.u[i]).abs() < 1e-10);
                assert!((v.du[i] - target.du[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma_of_zero_rhs_is_zero() {
        let grid = Grid::new(1.0, 32);
        let spec = ProblemSpec::new(
            Homeomorphism::p_laplacian(4.0),
            -1.0,
            1.0,
            ScalarField::constant(0.0),
        );
        let v = apply_gamma(&spec, &grid, &C1GridFunction::zero(grid.clone())).unwrap();
        assert!(norm_c1(&v) < 1e-12);
    }

    #[test]
    fn gamma_rejects_nonnegative_b() {
        let grid = Grid::new(1.0, 32);
        let spec = example_spec();
        match apply_gamma(&spec, &grid, &C1GridFunction::zero(grid.clone())) {
            Err(Error::NotInjective { .. }) => {}
            other => panic!("expected NotInjective, got {other:?}"),
        }
    }

    #[test]
    fn gamma_output_satisfies_boundary_structure() {
        let grid = Grid::new(1.0, 96);
        let spec = ProblemSpec::new(
            Homeomorphism::p_laplacian(4.0),
            -1.5,
            1.0,
            ScalarField::new(|t: f64, x: f64, y: f64| t.sin() + 0.3 * (x + y).tanh()),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = random_function(&grid, &mut rng);
            let v = apply_gamma(&spec, &grid, &u).unwrap();
            assert!((v.du[0] - v.u[0]).abs() < 1e-12, "v'(0) = v(0) violated");
            let lhs = spec.phi.eval(v.du[96]);
            let rhs = spec.phi.eval(spec.b * v.du[0]);
            assert!(
                (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
                "phi(v'(T)) = phi(b v'(0)) violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn residual_of_linear_oracle_is_tiny() {
        let grid = Grid::new(1.0, 256);
        let spec = linear_oracle_spec();
        let r = residual(&spec, &grid, &linear_oracle_solution(&grid));
        assert!(r.bc1 < 1e-14);
        assert!(r.bc2 < 1e-14);
        assert!(r.ode < 1e-10);
    }

    #[test]
    fn residual_of_zero_solution() {
        let grid = Grid::new(1.0, 32);
        let spec = ProblemSpec::new(
            Homeomorphism::identity(),
            -1.0,
            1.0,
            ScalarField::constant(0.0),
        );
        let r = residual(&spec, &grid, &C1GridFunction::zero(grid.clone()));
        assert_eq!(r.bc1, 0.0);
        assert_eq!(r.bc2, 0.0);
        assert_eq!(r.ode, 0.0);
    }

    #[test]
    fn residual_of_constant_nonsolution() {
        let grid = Grid::new(1.0, 32);
        let spec = ProblemSpec::new(
            Homeomorphism::identity(),
            1.0,
            1.0,
            ScalarField::constant(1.0),
        );
        let u = C1GridFunction::sample(grid.clone(), |_| 1.0, |_| 0.0);
        let r = residual(&spec, &grid, &u);
        assert_eq!(r.bc1, 1.0);
        assert_eq!(r.bc2, 0.0);
        assert_eq!(r.ode, 1.0);
    }

    #[test]
    fn evaluation_at_zero_identity() {
        // Any near-fixed point of M(lambda, .) has T Q(N_f u) close to
        // B(u'(0)).
        let grid = Grid::new(1.0, 256);
        let spec = linear_oracle_spec();
        let u = linear_oracle_solution(&grid);
        let (q, beta_over_t) = remark_identity(&spec, &grid, &u).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
        assert!((beta_over_t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn m1_maps_bounded_sets_to_bounded_sets() {
        // Computable shadow of complete continuity: images of the ball of
        // radius 2 under M1 stay below an explicit constant. For the cubic
        // example |f| <= e^2/2 + 1 on that ball, which caps every term.
        let grid = Grid::new(1.0, 64);
        let spec = example_spec();
        let cap = {
            let h = 2f64.exp() / 2.0 + 1.0;
            let phi_max = spec.phi.eval(2.0);
            let arg = phi_max + 2.0 * h;
            let dv_max = spec.phi.invert(arg).unwrap().abs();
            h + 2.0 + dv_max * (1.0 + spec.t_end) + dv_max
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = random_function(&grid, &mut rng);
            let v = apply_m1(&spec, &grid, &u).unwrap();
            assert!(
                norm_c1(&v) <= cap,
                "image norm {} exceeds cap {cap}",
                norm_c1(&v)
            );
        }
    }
}
