//! Explicit a priori bound formulas. These radii certify that solutions of
//! the homotopy families stay strictly inside the degree disc, and they size
//! the disc itself.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::Result;
use crate::function_space::{integrate_h, nemytskii, neg_part_l1, C1GridFunction, Grid};
use crate::homeomorphism::Homeomorphism;
use crate::operators::ProblemSpec;

/// The radii produced by the bound formulas. `rho_min` is the largest radius
/// present, the one the solver's disc must dominate.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoundReport {
    /// L = max{|phi(M1)|, |phi(M2)|}; 0 when no window is given.
    pub l: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// The derivative bound r from the lower-envelope argument (b = 1 route).
    pub r: Option<f64>,
    /// The self-mapped ball radius beta (2 + T) for the b < 0 route.
    pub beta: Option<f64>,
    pub rho_min: Option<f64>,
}

/// L = max{|phi(M1)|, |phi(M2)|}.
pub fn bound_l(phi: &Homeomorphism, m1: f64, m2: f64) -> f64 {
    assert!(m1 < m2, "window requires M1 < M2");
    phi.eval(m1).abs().max(phi.eval(m2).abs())
}

fn symmetric_inverse_max(phi: &Homeomorphism, level: f64) -> Result<f64> {
    let hi = phi.invert(level)?.abs();
    let lo = phi.invert(-level)?.abs();
    Ok(hi.max(lo))
}

/// R1 = a (2 + T) with a = max{|phi^{-1}(+-(L + 2 ||h||_L1))|}.
pub fn bound_r1(phi: &Homeomorphism, l: f64, h_l1: f64, t_end: f64) -> Result<f64> {
    assert!(h_l1 >= 0.0);
    let a = symmetric_inverse_max(phi, l + 2.0 * h_l1)?;
    Ok(a * (2.0 + t_end))
}

/// R2 = b (2 + T) with b = max{|phi^{-1}(+-(L + ||h||_L1))|}. The letter b
/// here is a radius, unrelated to the boundary parameter.
pub fn bound_r2(phi: &Homeomorphism, l: f64, h_l1: f64, t_end: f64) -> Result<f64> {
    assert!(h_l1 >= 0.0);
    let b = symmetric_inverse_max(phi, l + h_l1)?;
    Ok(b * (2.0 + t_end))
}

/// r = max{|phi^{-1}(+-(L + 2 ||c^-||_L1))|}, the derivative bound for the
/// b = 1 route with lower envelope c.
pub fn bound_r(phi: &Homeomorphism, m1: f64, m2: f64, c_neg_l1: f64) -> Result<f64> {
    assert!(c_neg_l1 >= 0.0);
    let l = bound_l(phi, m1, m2);
    symmetric_inverse_max(phi, l + 2.0 * c_neg_l1)
}

/// beta (2 + T) with beta = max{|phi^{-1}(+-||h||_L1)|}: the closed ball the
/// inverse operator maps into itself when |f| <= h and b < 0.
pub fn bound_beta(phi: &Homeomorphism, h_l1: f64, t_end: f64) -> Result<f64> {
    assert!(h_l1 >= 0.0);
    let beta = symmetric_inverse_max(phi, h_l1)?;
    Ok(beta * (2.0 + t_end))
}

/// L^1 norm of a time field sampled on the grid.
pub fn time_field_l1(grid: &Grid, samples: &[f64]) -> f64 {
    let abs: Vec<f64> = samples.iter().map(|&x| x.abs()).collect();
    integrate_h(grid, &abs)[grid.n()]
}

/// Assemble every bound the problem data allows.
pub fn compute_bounds(spec: &ProblemSpec, grid: &Grid) -> Result<BoundReport> {
    let mut report = BoundReport::default();
    let h_l1 = spec.h.as_ref().map(|h| time_field_l1(grid, &h.samples(grid)));
    let c_neg_l1 = spec
        .c
        .as_ref()
        .map(|c| neg_part_l1(grid, &c.samples(grid)));

    let mut radii: Vec<f64> = Vec::new();
    if let Some((m1, m2)) = spec.m_window {
        report.l = bound_l(&spec.phi, m1, m2);
        if let Some(h_l1) = h_l1 {
            let r1 = bound_r1(&spec.phi, report.l, h_l1, spec.t_end)?;
            let r2 = bound_r2(&spec.phi, report.l, h_l1, spec.t_end)?;
            report.r1 = Some(r1);
            report.r2 = Some(r2);
            radii.push(r1);
            radii.push(r2);
        }
        if let Some(c_neg_l1) = c_neg_l1 {
            let r = bound_r(&spec.phi, m1, m2, c_neg_l1)?;
            report.r = Some(r);
            radii.push(r * (2.0 + spec.t_end));
        }
    }
    if let Some(h_l1) = h_l1 {
        let beta = bound_beta(&spec.phi, h_l1, spec.t_end)?;
        report.beta = Some(beta);
        if spec.b < 0.0 {
            radii.push(beta);
        }
    }
    report.rho_min = radii
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(report)
}

/// Outcome of the sign-hypothesis probe. The hypothesis is universally
/// quantified over C^1 and cannot be proved numerically; probing can only
/// falsify it.
#[derive(Clone, Copy, Debug)]
pub struct SignProbeReport {
    /// Smallest |int f - B(u'(0))| seen among probes with u' >= M2.
    pub min_abs_upper: f64,
    /// Smallest |int f - B(u'(0))| seen among probes with u' <= M1.
    pub min_abs_lower: f64,
    /// Sign seen on the upper family (+1, -1, or 0 for mixed).
    pub upper_sign: i32,
    /// Sign seen on the lower family.
    pub lower_sign: i32,
    pub falsified: bool,
}

/// Probe the hypothesis that int_0^T f(t,u,u') dt - B(u'(0)) stays away from
/// zero on every u with u' >= M2 (and with u' <= M1). Samples `probe_count`
/// random C^1 functions per side; detects sign changes and near-zeros.
pub fn check_sign_hypothesis(
    spec: &ProblemSpec,
    grid: &Grid,
    probe_count: usize,
    seed: u64,
) -> Result<SignProbeReport> {
    let (m1, m2) = spec
        .m_window
        .expect("sign-hypothesis probe requires M1/M2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bm = spec.boundary_map();
    let near_zero = 1e-8;

    let mut run_side = |base: f64, upward: bool| -> Result<(f64, i32)> {
        let mut min_abs = f64::INFINITY;
        let mut pos = 0usize;
        let mut neg = 0usize;
        for _ in 0..probe_count {
            let amp: f64 = rng.random_range(0.0..2.0);
            let freq: f64 = rng.random_range(0.0..3.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let u0: f64 = rng.random_range(-2.0..2.0);
            let du: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&t| {
                    let bump = amp * (1.0 + (freq * t + phase).sin());
                    if upward {
                        base + bump
                    } else {
                        base - bump
                    }
                })
                .collect();
            let u = C1GridFunction::from_derivative(grid.clone(), u0, du);
            let w = nemytskii(&spec.f, &u)?;
            let integral = integrate_h(grid, &w)[grid.n()];
            let val = integral - bm.eval(u.du[0]);
            min_abs = min_abs.min(val.abs());
            if val > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        let sign = if pos > 0 && neg > 0 {
            0
        } else if pos > 0 {
            1
        } else {
            -1
        };
        Ok((min_abs, sign))
    };

    let (min_abs_upper, upper_sign) = run_side(m2, true)?;
    let (min_abs_lower, lower_sign) = run_side(m1, false)?;
    let falsified = upper_sign == 0
        || lower_sign == 0
        || min_abs_upper < near_zero
        || min_abs_lower < near_zero;
    Ok(SignProbeReport {
        min_abs_upper,
        min_abs_lower,
        upper_sign,
        lower_sign,
        falsified,
    })
}
