//! Fixed-point solving and certificate assembly.
//!
//! Existence is certified by topology (nonzero degree of the reduced planar
//! map plus a priori bounds) or by the self-mapped ball of the b < 0 route;
//! convergence of the damped, Anderson-accelerated iteration itself carries
//! no guarantee and is reported honestly through residuals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bounds::{compute_bounds, BoundReport};
use crate::degree::{brouwer_degree, build_g, DegreeQuery, PlanarMap};
use crate::error::Error as NumError;
use crate::function_space::{norm_c1, C1GridFunction, Grid};
use crate::operators::{
    apply_gamma, apply_m_lambda, apply_z, remark_identity, residual, ProblemSpec, Residual,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    /// Homotopy continuation with the degree certificate (general b).
    GeneralB,
    /// Direct iteration of the inverse operator inside its ball (b < 0).
    BNegativeSchauder,
    /// Homotopy route sized by the lower-envelope bound r (b = 1).
    BOneWard,
    /// Odd phi with b = -1: the Schauder route, existence guaranteed.
    BMinusOneOdd,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Grid intervals.
    pub n: usize,
    /// Damping factor in (0, 1].
    pub gamma: f64,
    /// Anderson mixing memory; 0 disables acceleration.
    pub anderson_memory: usize,
    /// Number of equal continuation steps in lambda.
    pub lambda_steps: usize,
    /// Fixed-point residual target in the C^1 norm.
    pub tol_fp: f64,
    /// ODE residual target for the final verification.
    pub tol_res: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::GeneralB,
            n: 512,
            gamma: 0.5,
            anderson_memory: 3,
            lambda_steps: 8,
            tol_fp: 1e-8,
            tol_res: 1e-5,
            max_iters: 400,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) {
        assert!(self.gamma > 0.0 && self.gamma <= 1.0, "gamma must be in (0, 1]");
        assert!(self.tol_fp > 0.0 && self.tol_res > 0.0, "tolerances must be positive");
        assert!(self.lambda_steps >= 1, "lambda_steps must be >= 1");
        assert!(self.n >= 2, "grid needs at least 2 intervals");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    MLambda,
    ZLambda,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Nonzero degree on the bound disc: existence certified.
    DegreeCertified,
    /// Self-mapped ball of the inverse operator: existence certified.
    SchauderMode,
    /// Only residuals vouch for the answer.
    ResidualOnly,
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Certificate::DegreeCertified => write!(f, "DEGREE_CERTIFIED"),
            Certificate::SchauderMode => write!(f, "SCHAUDER_MODE"),
            Certificate::ResidualOnly => write!(f, "RESIDUAL_ONLY"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FpDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: C1GridFunction,
    pub fp_residual: f64,
    pub bc_residuals: (f64, f64),
    pub ode_residual: f64,
    pub iterations: usize,
    pub lambda_path: Vec<(f64, usize)>,
    pub degree: Option<i32>,
    pub bounds: BoundReport,
    pub rho: Option<f64>,
    pub certificate: Certificate,
    pub notes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("fixed-point iteration did not converge (best residual {best_residual:.3e}{})",
        lambda.map(|l| format!(" at lambda = {l}")).unwrap_or_default())]
    NoConvergence {
        best: Box<C1GridFunction>,
        best_residual: f64,
        history: Vec<f64>,
        lambda: Option<f64>,
    },
    #[error("converged iterate has ||u||_1 = {norm:.6} >= bound radius {radius:.6}")]
    BoundViolation { norm: f64, radius: f64 },
    #[error("problem data missing for this mode: {0}")]
    MissingData(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

pub type SolveResult<T> = std::result::Result<T, SolveError>;

fn pack(u: &C1GridFunction) -> DVector<f64> {
    let len = u.u.len();
    let mut v = DVector::zeros(2 * len);
    v.rows_mut(0, len).copy_from_slice(&u.u);
    v.rows_mut(len, len).copy_from_slice(&u.du);
    v
}

fn unpack(grid: &Grid, v: &DVector<f64>) -> C1GridFunction {
    let len = grid.n() + 1;
    C1GridFunction::new(
        grid.clone(),
        v.rows(0, len).iter().copied().collect(),
        v.rows(len, len).iter().copied().collect(),
    )
}

fn c1_norm_packed(v: &DVector<f64>) -> f64 {
    let len = v.len() / 2;
    let sup = |it: nalgebra::DVectorView<f64>| it.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    sup(v.rows(0, len)) + sup(v.rows(len, len))
}

/// Damped fixed-point iteration u <- (1 - gamma) u + gamma Op(u) with
/// Anderson mixing over the configured memory. `ball_cap`, when set, rejects
/// operator images that leave the closed ball (plus slack) in C^1 norm.
pub fn solve_fixed_point(
    spec: &ProblemSpec,
    grid: &Grid,
    config: &SolverConfig,
    kind: OperatorKind,
    lambda: f64,
    initial: &C1GridFunction,
    ball_cap: Option<f64>,
) -> SolveResult<(C1GridFunction, FpDiagnostics)> {
    let op = |u: &C1GridFunction| -> SolveResult<C1GridFunction> {
        let out = match kind {
            OperatorKind::MLambda => apply_m_lambda(spec, grid, lambda, u)?,
            OperatorKind::ZLambda => apply_z(spec, grid, lambda, u)?,
            OperatorKind::Gamma => apply_gamma(spec, grid, u)?,
        };
        if let Some(radius) = ball_cap {
            let norm = norm_c1(&out);
            if norm > radius + 1e-9 {
                return Err(SolveError::BoundViolation { norm, radius });
            }
        }
        Ok(out)
    };

    let gamma = config.gamma;
    let memory = config.anderson_memory;
    let mut x = pack(initial);
    let mut history = Vec::new();
    let mut best = x.clone();
    let mut best_residual = f64::INFINITY;
    let mut xs: Vec<DVector<f64>> = Vec::new();
    let mut fs: Vec<DVector<f64>> = Vec::new();

    for iter in 0..config.max_iters {
        let gx = pack(&op(&unpack(grid, &x))?);
        let f = &gx - &x;
        let res = c1_norm_packed(&f);
        history.push(res);
        if res < best_residual {
            best_residual = res;
            best = x.clone();
        }
        if res <= config.tol_fp {
            return Ok((
                unpack(grid, &x),
                FpDiagnostics {
                    iterations: iter + 1,
                    final_residual: res,
                    history,
                },
            ));
        }

        xs.push(x.clone());
        fs.push(f.clone());
        if xs.len() > memory + 1 {
            xs.remove(0);
            fs.remove(0);
        }

        let mut next = &x + gamma * &f;
        if memory > 0 && fs.len() >= 2 {
            let k = fs.len() - 1;
            let dim = x.len();
            let mut df = DMatrix::zeros(dim, k);
            let mut dx = DMatrix::zeros(dim, k);
            for j in 0..k {
                df.set_column(j, &(&fs[j + 1] - &fs[j]));
                dx.set_column(j, &(&xs[j + 1] - &xs[j]));
            }
            let svd = df.clone().svd(true, true);
            if let Ok(theta) = svd.solve(&f, 1e-12) {
                let candidate = &x + gamma * &f - (&dx + gamma * &df) * &theta;
                if candidate.iter().all(|v| v.is_finite()) {
                    next = candidate;
                }
            }
        }
        if !next.iter().all(|v| v.is_finite()) {
            next = &x + gamma * &f;
        }
        x = next;
    }

    Err(SolveError::NoConvergence {
        best: Box::new(unpack(grid, &best)),
        best_residual,
        history,
        lambda: Some(lambda),
    })
}

/// Damped Newton with finite-difference Jacobian on a planar map. Returns a
/// root with |G| below `tol`, or None.
fn planar_newton(map: &PlanarMap, start: (f64, f64), tol: f64) -> Option<(f64, f64)> {
    let (mut x, mut y) = start;
    let norm = |p: (f64, f64)| p.0.hypot(p.1);
    for _ in 0..60 {
        let g = map.eval(x, y);
        let gn = norm(g);
        if gn <= tol {
            return Some((x, y));
        }
        let hx = 1e-6 * (1.0 + x.abs());
        let hy = 1e-6 * (1.0 + y.abs());
        let gx = map.eval(x + hx, y);
        let gy = map.eval(x, y + hy);
        let j11 = (gx.0 - g.0) / hx;
        let j21 = (gx.1 - g.1) / hx;
        let j12 = (gy.0 - g.0) / hy;
        let j22 = (gy.1 - g.1) / hy;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-14 || !det.is_finite() {
            return None;
        }
        let dx = (g.0 * j22 - g.1 * j12) / det;
        let dy = (j11 * g.1 - j21 * g.0) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let cand = (x - step * dx, y - step * dy);
            let cn = norm(map.eval(cand.0, cand.1));
            if cn.is_finite() && cn < gn {
                x = cand.0;
                y = cand.1;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    let g = map.eval(x, y);
    if norm(g) <= tol {
        Some((x, y))
    } else {
        None
    }
}

/// Roots of G inside the disc of radius rho, found by multi-start Newton.
/// Deterministic: starts are the center plus a fixed ring; duplicates are
/// merged and the list is sorted.
fn find_g_roots(map: &PlanarMap, rho: f64) -> Vec<(f64, f64)> {
    let mut starts = vec![(0.0, 0.0)];
    for k in 0..7 {
        let angle = std::f64::consts::TAU * k as f64 / 7.0;
        starts.push((0.5 * rho * angle.cos(), 0.5 * rho * angle.sin()));
    }
    let scale = 1.0 + rho;
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for s in starts {
        if let Some(r) = planar_newton(map, s, 1e-12 * scale) {
            if r.0.hypot(r.1) >= rho {
                continue;
            }
            if !roots
                .iter()
                .any(|&q| (q.0 - r.0).hypot(q.1 - r.1) < 1e-6 * scale)
            {
                roots.push(r);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.truncate(8);
    roots
}

/// Homotopy continuation: seed from the planar roots of G, continue the
/// family from lambda = 0 to 1 with warm starts, and certify with the degree
/// and the a priori radii.
pub fn solve_homotopy(spec: &ProblemSpec, config: &SolverConfig) -> SolveResult<SolveReport> {
    config.validate();
    let grid = Grid::new(spec.t_end, config.n);
    let bounds = compute_bounds(spec, &grid)?;
    let rho = spec.rho.or(bounds.rho_min.map(|r| 1.05 * r));
    let mut notes = Vec::new();

    let g = build_g(spec, &grid);
    let degree = match rho {
        Some(r) => Some(brouwer_degree(&g, &DegreeQuery::disc((0.0, 0.0), r))?),
        None => {
            notes.push(
                "no hypothesis data: degree certificate unavailable, residuals only".to_string(),
            );
            None
        }
    };
    if degree == Some(0) {
        notes.push(
            "degree of G is 0: existence not certified; solutions may be non-unique or absent"
                .to_string(),
        );
    }

    let seed_radius = rho.unwrap_or(10.0);
    let mut seeds = find_g_roots(&g, seed_radius);
    if seeds.is_empty() {
        notes.push("no planar roots of G found; seeding from zero".to_string());
        seeds.push((0.0, 0.0));
    }

    let mut last_err: Option<SolveError> = None;
    for (x0, y0) in seeds {
        let seed = C1GridFunction::sample(grid.clone(), |t| x0 + y0 * t, |_| y0);
        let mut u = seed;
        let mut lambda_path = Vec::new();
        let mut total_iters = 0usize;
        let mut failed = None;
        for k in 0..=config.lambda_steps {
            let lambda = k as f64 / config.lambda_steps as f64;
            match solve_fixed_point(spec, &grid, config, OperatorKind::MLambda, lambda, &u, None) {
                Ok((next, diag)) => {
                    total_iters += diag.iterations;
                    lambda_path.push((lambda, diag.iterations));
                    u = next;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            last_err = Some(e);
            continue;
        }
        let res = residual(spec, &grid, &u);
        let fp = {
            let im = apply_m_lambda(spec, &grid, 1.0, &u)?;
            let diff = C1GridFunction::new(
                grid.clone(),
                u.u.iter().zip(&im.u).map(|(a, b)| a - b).collect(),
                u.du.iter().zip(&im.du).map(|(a, b)| a - b).collect(),
            );
            norm_c1(&diff)
        };
        let norm = norm_c1(&u);
        if let Some(r) = rho {
            if norm >= r {
                return Err(SolveError::BoundViolation { norm, radius: r });
            }
        }
        if res.bc1 > config.tol_fp || res.bc2 > config.tol_fp || res.ode > config.tol_res {
            last_err = Some(SolveError::NoConvergence {
                best: Box::new(u),
                best_residual: res.ode,
                history: vec![],
                lambda: Some(1.0),
            });
            continue;
        }
        let certificate = match degree {
            Some(d) if d != 0 => Certificate::DegreeCertified,
            _ => Certificate::ResidualOnly,
        };
        return Ok(SolveReport {
            fp_residual: fp,
            bc_residuals: (res.bc1, res.bc2),
            ode_residual: res.ode,
            iterations: total_iters,
            lambda_path,
            degree,
            bounds,
            rho,
            certificate,
            notes,
            solution: u,
        });
    }
    Err(last_err.unwrap_or(SolveError::MissingData(
        "homotopy produced no candidate".to_string(),
    )))
}

/// The b < 0 route: iterate the inverse operator inside its self-mapped ball.
pub fn solve_schauder(spec: &ProblemSpec, config: &SolverConfig) -> SolveResult<SolveReport> {
    config.validate();
    if spec.b >= 0.0 {
        return Err(SolveError::Numeric(NumError::NotInjective { b: spec.b }));
    }
    let grid = Grid::new(spec.t_end, config.n);
    if spec.h.is_none() {
        return Err(SolveError::MissingData(
            "the b < 0 route requires the dominating envelope h".to_string(),
        ));
    }
    let bounds = compute_bounds(spec, &grid)?;
    let ball = bounds
        .beta
        .expect("beta radius follows from h");
    let initial = C1GridFunction::zero(grid.clone());
    let (u, diag) = solve_fixed_point(
        spec,
        &grid,
        config,
        OperatorKind::Gamma,
        1.0,
        &initial,
        Some(ball),
    )?;
    let res = residual(spec, &grid, &u);
    Ok(SolveReport {
        fp_residual: diag.final_residual,
        bc_residuals: (res.bc1, res.bc2),
        ode_residual: res.ode,
        iterations: diag.iterations,
        lambda_path: vec![],
        degree: None,
        bounds,
        rho: Some(ball),
        certificate: Certificate::SchauderMode,
        notes: vec![],
        solution: u,
    })
}

/// Mode dispatch.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig) -> SolveResult<SolveReport> {
    match config.mode {
        SolverMode::GeneralB | SolverMode::BOneWard => solve_homotopy(spec, config),
        SolverMode::BNegativeSchauder | SolverMode::BMinusOneOdd => solve_schauder(spec, config),
    }
}

/// Verification tolerances for a candidate solution.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub bc: f64,
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bc: 1e-8,
            ode: 1e-5,
        }
    }
}

/// Verdict of the independent check: residuals plus the boundary identity
/// Q(N_f(u)) = B(u'(0)) / T.
#[derive(Clone, Copy, Debug)]
pub struct Verdict {
    pub pass: bool,
    pub residual: Residual,
    pub remark_lhs: f64,
    pub remark_rhs: f64,
}

pub fn verify(
    spec: &ProblemSpec,
    grid: &Grid,
    u: &C1GridFunction,
    tol: Tolerances,
) -> SolveResult<Verdict> {
    let res = residual(spec, grid, u);
    let (lhs, rhs) = remark_identity(spec, grid, u)?;
    let pass = res.bc1 <= tol.bc && res.bc2 <= tol.bc && res.ode <= tol.ode;
    Ok(Verdict {
        pass,
        residual: res,
        remark_lhs: lhs,
        remark_rhs: rhs,
    })
}
