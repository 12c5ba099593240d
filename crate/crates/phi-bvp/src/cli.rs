//! Command-line front end: solve, verify, degree and bounds, with CSV export
//! of solution samples.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{debug, info};

use crate::bounds::compute_bounds;
use crate::degree::{brouwer_degree, build_g, DegreeQuery};
use crate::dsl::load_problem;
use crate::error::Error as NumError;
use crate::function_space::{norm_c1, C1GridFunction, Grid};
use crate::operators::{node_residuals, ProblemSpec};
use crate::solver::{solve, verify, SolveError, SolveReport, SolverConfig, Tolerances, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DEGREE_ZERO: i32 = 4;
pub const EXIT_ZERO_ON_BOUNDARY: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "phi-bvp",
    version,
    about = "Solve (phi(u'))' = f(t,u,u') with u'(0)=u(0), u'(T)=b u'(0)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a problem file, writing solution samples and a report.
    Solve {
        problem: PathBuf,
        /// Grid intervals (overrides the file).
        #[arg(long)]
        n: Option<usize>,
        /// Degree disc radius (overrides the file).
        #[arg(long)]
        rho: Option<f64>,
        /// ODE residual tolerance (overrides the file).
        #[arg(long = "tol-res")]
        tol_res: Option<f64>,
        /// Probe/iteration seed (overrides the file).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a CSV of solution samples against a problem file.
    Verify {
        problem: PathBuf,
        csv: PathBuf,
        #[arg(long = "tol-res")]
        tol_res: Option<f64>,
        #[arg(long = "tol-bc")]
        tol_bc: Option<f64>,
    },
    /// Brouwer degree of the reduced planar map on a disc.
    Degree {
        problem: PathBuf,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// A priori bound radii for a problem file.
    Bounds {
        problem: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve {
            problem,
            n,
            rho,
            tol_res,
            seed,
            out,
        } => cmd_solve(&problem, n, rho, tol_res, seed, out.as_deref()),
        Command::Verify {
            problem,
            csv,
            tol_res,
            tol_bc,
        } => cmd_verify(&problem, &csv, tol_res, tol_bc),
        Command::Degree { problem, rho, n } => cmd_degree(&problem, rho, n),
        Command::Bounds { problem, n } => cmd_bounds(&problem, n),
    }
}

fn load(path: &Path) -> Result<(ProblemSpec, SolverConfig), i32> {
    load_problem(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_VALIDATION
    })
}

fn apply_overrides(
    spec: &mut ProblemSpec,
    config: &mut SolverConfig,
    n: Option<usize>,
    rho: Option<f64>,
    tol_res: Option<f64>,
    seed: Option<u64>,
) {
    if let Some(n) = n {
        config.n = n;
    }
    if let Some(rho) = rho {
        spec.rho = Some(rho);
    }
    if let Some(t) = tol_res {
        config.tol_res = t;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
}

const CSV_HEADER: &str = "t,u,du,phi_du,ode_residual";

fn write_csv(path: &Path, spec: &ProblemSpec, grid: &Grid, u: &C1GridFunction) -> std::io::Result<()> {
    let defects = node_residuals(spec, grid, u);
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, defect) in defects.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            grid.node(i),
            u.u[i],
            u.du[i],
            spec.phi.eval(u.du[i]),
            defect
        );
    }
    std::fs::write(path, out)
}

fn format_report(report: &SolveReport, verdict: &Verdict) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "certificate = {}", report.certificate);
    let _ = writeln!(
        s,
        "degree = {}",
        report.degree.map_or("none".to_string(), |d| d.to_string())
    );
    if let Some(rho) = report.rho {
        let _ = writeln!(s, "rho = {rho:.17e}");
    }
    let _ = writeln!(s, "bound_L = {:.17e}", report.bounds.l);
    if let Some(r1) = report.bounds.r1 {
        let _ = writeln!(s, "bound_R1 = {r1:.17e}");
    }
    if let Some(r2) = report.bounds.r2 {
        let _ = writeln!(s, "bound_R2 = {r2:.17e}");
    }
    if let Some(r) = report.bounds.r {
        let _ = writeln!(s, "bound_r = {r:.17e}");
    }
    if let Some(beta) = report.bounds.beta {
        let _ = writeln!(s, "bound_beta_ball = {beta:.17e}");
    }
    if let Some(rho_min) = report.bounds.rho_min {
        let _ = writeln!(s, "rho_min = {rho_min:.17e}");
    }
    let _ = writeln!(s, "fp_residual = {:.17e}", report.fp_residual);
    let _ = writeln!(s, "bc_residual_0 = {:.17e}", report.bc_residuals.0);
    let _ = writeln!(s, "bc_residual_T = {:.17e}", report.bc_residuals.1);
    let _ = writeln!(s, "ode_residual = {:.17e}", report.ode_residual);
    let _ = writeln!(s, "norm_c1 = {:.17e}", norm_c1(&report.solution));
    let _ = writeln!(s, "iterations = {}", report.iterations);
    for (lambda, iters) in &report.lambda_path {
        let _ = writeln!(s, "lambda_step = {lambda} {iters}");
    }
    let _ = writeln!(s, "remark_lhs = {:.17e}", verdict.remark_lhs);
    let _ = writeln!(s, "remark_rhs = {:.17e}", verdict.remark_rhs);
    let _ = writeln!(s, "verify = {}", if verdict.pass { "PASS" } else { "FAIL" });
    for note in &report.notes {
        let _ = writeln!(s, "note = {note}");
    }
    s
}

fn cmd_solve(
    problem: &Path,
    n: Option<usize>,
    rho: Option<f64>,
    tol_res: Option<f64>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> i32 {
    let (mut spec, mut config) = match load(problem) {
        Ok(v) => v,
        Err(code) => return code,
    };
    apply_overrides(&mut spec, &mut config, n, rho, tol_res, seed);
    info!("solving {} (mode {:?}, n = {})", problem.display(), config.mode, config.n);

    let report = match solve(&spec, &config) {
        Ok(r) => r,
        Err(e @ SolveError::NoConvergence { .. }) => {
            eprintln!("error: {e}");
            return EXIT_NO_CONVERGENCE;
        }
        Err(SolveError::MissingData(m)) => {
            eprintln!("error: {m}");
            return EXIT_VALIDATION;
        }
        Err(SolveError::Numeric(NumError::ZeroOnBoundary {
            magnitude,
            threshold,
            angle,
        })) => {
            eprintln!(
                "error: degree undefined, |G| = {magnitude:.3e} < {threshold:.3e} on the boundary (angle {angle:.3})"
            );
            return EXIT_ZERO_ON_BOUNDARY;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NO_CONVERGENCE;
        }
    };

    let grid = Grid::new(spec.t_end, config.n);
    let tol = Tolerances {
        bc: config.tol_fp,
        ode: config.tol_res,
    };
    let verdict = match verify(&spec, &grid, &report.solution, tol) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NO_CONVERGENCE;
        }
    };

    let out_dir = out.unwrap_or(Path::new("."));
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_VALIDATION;
    }
    let stem = problem
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "problem".to_string());
    let csv_path = out_dir.join(format!("{stem}.solution.csv"));
    let report_path = out_dir.join(format!("{stem}.report.txt"));
    if let Err(e) = write_csv(&csv_path, &spec, &grid, &report.solution) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_VALIDATION;
    }
    let report_text = format_report(&report, &verdict);
    if let Err(e) = std::fs::write(&report_path, &report_text) {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return EXIT_VALIDATION;
    }
    print!("{report_text}");
    println!("samples = {}", csv_path.display());
    debug!("report written to {}", report_path.display());
    if verdict.pass {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}

fn read_csv(path: &Path, t_end: f64) -> Result<C1GridFunction, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(format!(
                "malformed CSV: expected header `{CSV_HEADER}`, found {other:?}"
            ))
        }
    }
    let mut ts = Vec::new();
    let mut us = Vec::new();
    let mut dus = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(format!(
                "malformed CSV: row {} has {} fields, expected 5",
                lineno + 2,
                fields.len()
            ));
        }
        let parse = |s: &str, what: &str| -> Result<f64, String> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("malformed CSV: bad {what} `{s}` on row {}", lineno + 2))
        };
        ts.push(parse(fields[0], "t")?);
        us.push(parse(fields[1], "u")?);
        dus.push(parse(fields[2], "du")?);
    }
    if ts.len() < 3 {
        return Err("malformed CSV: need at least 3 sample rows".to_string());
    }
    let n = ts.len() - 1;
    let grid = Grid::new(t_end, n);
    for (i, &t) in ts.iter().enumerate() {
        if (t - grid.node(i)).abs() > 1e-9 * (1.0 + t_end) {
            return Err(format!(
                "malformed CSV: t column is not the uniform grid on [0, {t_end}] (row {})",
                i + 2
            ));
        }
    }
    Ok(C1GridFunction::new(grid, us, dus))
}

fn cmd_verify(problem: &Path, csv: &Path, tol_res: Option<f64>, tol_bc: Option<f64>) -> i32 {
    let (spec, config) = match load(problem) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let u = match read_csv(csv, spec.t_end) {
        Ok(u) => u,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let tol = Tolerances {
        bc: tol_bc.unwrap_or(config.tol_fp),
        ode: tol_res.unwrap_or(config.tol_res),
    };
    let grid = u.grid.clone();
    match verify(&spec, &grid, &u, tol) {
        Ok(v) => {
            println!("bc_residual_0 = {:.6e}", v.residual.bc1);
            println!("bc_residual_T = {:.6e}", v.residual.bc2);
            println!("ode_residual = {:.6e}", v.residual.ode);
            println!("remark_lhs = {:.6e}", v.remark_lhs);
            println!("remark_rhs = {:.6e}", v.remark_rhs);
            println!("verify = {}", if v.pass { "PASS" } else { "FAIL" });
            if v.pass {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NO_CONVERGENCE
        }
    }
}

fn cmd_degree(problem: &Path, rho: Option<f64>, n: Option<usize>) -> i32 {
    let (mut spec, mut config) = match load(problem) {
        Ok(v) => v,
        Err(code) => return code,
    };
    apply_overrides(&mut spec, &mut config, n, rho, None, None);
    let grid = Grid::new(spec.t_end, config.n);
    let rho = match spec.rho {
        Some(r) => r,
        None => match compute_bounds(&spec, &grid) {
            Ok(b) => match b.rho_min {
                Some(r) => 1.05 * r,
                None => {
                    eprintln!("error: no disc radius: pass --rho or provide hypothesis data");
                    return EXIT_VALIDATION;
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_NO_CONVERGENCE;
            }
        },
    };
    let g = build_g(&spec, &grid);
    match brouwer_degree(&g, &DegreeQuery::disc((0.0, 0.0), rho)) {
        Ok(d) => {
            println!("rho = {rho:.17e}");
            println!("degree = {d}");
            if d != 0 {
                EXIT_OK
            } else {
                EXIT_DEGREE_ZERO
            }
        }
        Err(NumError::ZeroOnBoundary {
            magnitude,
            threshold,
            angle,
        }) => {
            eprintln!(
                "error: degree undefined, |G| = {magnitude:.3e} < {threshold:.3e} on the boundary (angle {angle:.3})"
            );
            EXIT_ZERO_ON_BOUNDARY
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NO_CONVERGENCE
        }
    }
}

fn cmd_bounds(problem: &Path, n: Option<usize>) -> i32 {
    let (spec, mut config) = match load(problem) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(n) = n {
        config.n = n;
    }
    let grid = Grid::new(spec.t_end, config.n);
    match compute_bounds(&spec, &grid) {
        Ok(b) => {
            println!("L = {:.17e}", b.l);
            if let Some(r1) = b.r1 {
                println!("R1 = {r1:.17e}");
            }
            if let Some(r2) = b.r2 {
                println!("R2 = {r2:.17e}");
            }
            if let Some(r) = b.r {
                println!("r = {r:.17e}");
                println!("r_ball = {:.17e}", r * (2.0 + spec.t_end));
            }
            if let Some(beta) = b.beta {
                println!("beta_ball = {beta:.17e}");
            }
            match b.rho_min {
                Some(r) => println!("rho_min = {r:.17e}"),
                None => println!("rho_min = none"),
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NO_CONVERGENCE
        }
    }
}
