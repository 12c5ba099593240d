//! Problem definition files: TOML-style `[section]` / `key = value` text
//! with quoted expression strings. See docs/problem-format.md for the
//! grammar.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;
use toml::{Table, Value};

use crate::dsl::expr::{parse_expression, Expr, ParseError};
use crate::function_space::ScalarField;
use crate::homeomorphism::Homeomorphism;
use crate::operators::{ProblemSpec, TimeField};
use crate::solver::{SolverConfig, SolverMode};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("document error: {0}")]
    Document(String),
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("{field}: {source}")]
    Expr {
        field: String,
        source: ParseError,
    },
}

fn validation(field: &str, message: impl Into<String>) -> LoadError {
    LoadError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn as_f64(v: &Value, field: &str) -> Result<f64, LoadError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(validation(field, format!("expected a number, got {other}"))),
    }
}

struct Section<'a> {
    name: &'a str,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn f64(&self, key: &str) -> Result<Option<f64>, LoadError> {
        self.table
            .get(key)
            .map(|v| as_f64(v, &format!("{}.{}", self.name, key)))
            .transpose()
    }

    fn require_f64(&self, key: &str) -> Result<f64, LoadError> {
        self.f64(key)?
            .ok_or_else(|| validation(&format!("{}.{}", self.name, key), "missing required field"))
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>, LoadError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(validation(
                &format!("{}.{}", self.name, key),
                format!("expected a quoted string, got {other}"),
            )),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, LoadError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(validation(
                &format!("{}.{}", self.name, key),
                format!("expected true/false, got {other}"),
            )),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), LoadError> {
        for key in self.table.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(validation(
                    &format!("{}.{}", self.name, key),
                    "unknown key",
                ));
            }
        }
        Ok(())
    }
}

fn section<'a>(doc: &'a Table, name: &'a str) -> Result<Option<Section<'a>>, LoadError> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(Section { name, table: t })),
        Some(_) => Err(validation(name, "expected a [section]")),
    }
}

fn parse_field_expr(
    sec: &Section<'_>,
    allowed_vars: &[&str],
) -> Result<Expr, LoadError> {
    let field = format!("{}.expr", sec.name);
    let src = sec
        .str("expr")?
        .ok_or_else(|| validation(&field, "missing required field"))?;
    parse_expression(src, allowed_vars).map_err(|source| LoadError::Expr { field, source })
}

fn expr_to_scalar_field(e: Expr) -> ScalarField {
    ScalarField::new(move |t, x, y| {
        e.eval(&[("t", t), ("x", x), ("y", y)]).unwrap_or(f64::NAN)
    })
}

fn expr_to_time_field(e: Expr) -> TimeField {
    TimeField::new(move |t| e.eval(&[("t", t)]).unwrap_or(f64::NAN))
}

fn load_phi(doc: &Table) -> Result<Homeomorphism, LoadError> {
    let sec = section(doc, "phi")?
        .ok_or_else(|| validation("phi", "missing required section"))?;
    let kind = sec.str("kind")?.unwrap_or("identity");
    match kind {
        "identity" => {
            sec.check_keys(&["kind"])?;
            Ok(Homeomorphism::identity())
        }
        "p_laplacian" => {
            sec.check_keys(&["kind", "p"])?;
            let p = sec.require_f64("p")?;
            if p <= 1.0 {
                return Err(validation("phi.p", "p-Laplacian exponent requires p > 1"));
            }
            Ok(Homeomorphism::p_laplacian(p))
        }
        "bounded_tanh" => {
            sec.check_keys(&["kind", "a"])?;
            let a = sec.require_f64("a")?;
            if a <= 0.0 {
                return Err(validation("phi.a", "scale requires a > 0"));
            }
            Ok(Homeomorphism::bounded_tanh(a))
        }
        "custom" => {
            sec.check_keys(&["kind", "expr", "inverse", "odd", "range"])?;
            let fwd = parse_field_expr(&sec, &["x"])?;
            let inv_src = sec.str("inverse")?;
            let odd = sec.bool("odd")?.unwrap_or(false);
            let range = match sec.table.get("range") {
                None => (f64::NEG_INFINITY, f64::INFINITY),
                Some(Value::Array(a)) if a.len() == 2 => (
                    as_f64(&a[0], "phi.range")?,
                    as_f64(&a[1], "phi.range")?,
                ),
                Some(_) => {
                    return Err(validation("phi.range", "expected [lo, hi]"));
                }
            };
            let fwd_arc = Arc::new(fwd);
            let fwd_closure = {
                let e = fwd_arc.clone();
                Arc::new(move |x: f64| e.eval(&[("x", x)]).unwrap_or(f64::NAN))
                    as crate::homeomorphism::ScalarFn
            };
            let inverse = match inv_src {
                None => None,
                Some(src) => {
                    let e = parse_expression(src, &["x"]).map_err(|source| LoadError::Expr {
                        field: "phi.inverse".to_string(),
                        source,
                    })?;
                    Some(Arc::new(move |x: f64| e.eval(&[("x", x)]).unwrap_or(f64::NAN))
                        as crate::homeomorphism::ScalarFn)
                }
            };
            // Validate the pair by round-trip sampling before trusting it.
            if let Some(inv) = &inverse {
                for k in -20..=20 {
                    let x = k as f64 / 4.0;
                    let z = fwd_closure(x);
                    if !(z > range.0 && z < range.1) && z != 0.0 {
                        continue;
                    }
                    let back = inv(z);
                    if !(back - x).abs().le(&(1e-8 * (1.0 + x.abs()))) {
                        return Err(validation(
                            "phi.inverse",
                            format!("round trip failed at x = {x}: inverse(phi(x)) = {back}"),
                        ));
                    }
                }
            }
            Ok(Homeomorphism::custom(fwd_closure, inverse, range, odd))
        }
        other => Err(validation(
            "phi.kind",
            format!("unknown kind `{other}` (identity | p_laplacian | bounded_tanh | custom)"),
        )),
    }
}

fn load_solver(
    doc: &Table,
    b: f64,
    phi: &Homeomorphism,
    has_h: bool,
    has_c: bool,
) -> Result<SolverConfig, LoadError> {
    // infer the mode from the problem structure; an explicit mode wins
    let inferred = if b < 0.0 && has_h {
        if b == -1.0 && phi.is_odd() {
            SolverMode::BMinusOneOdd
        } else {
            SolverMode::BNegativeSchauder
        }
    } else if b == 1.0 && has_c {
        SolverMode::BOneWard
    } else {
        SolverMode::GeneralB
    };
    let mut config = SolverConfig {
        mode: inferred,
        ..SolverConfig::default()
    };

    let Some(sec) = section(doc, "solver")? else {
        return Ok(config);
    };
    sec.check_keys(&[
        "mode",
        "n",
        "gamma",
        "anderson_memory",
        "lambda_steps",
        "tol_fp",
        "tol_res",
        "max_iters",
        "seed",
    ])?;
    if let Some(mode) = sec.str("mode")? {
        config.mode = match mode {
            "general_b" => SolverMode::GeneralB,
            "b_negative_schauder" => SolverMode::BNegativeSchauder,
            "b_one_ward" => SolverMode::BOneWard,
            "b_minus_one_odd" => SolverMode::BMinusOneOdd,
            other => {
                return Err(validation(
                    "solver.mode",
                    format!("unknown mode `{other}`"),
                ))
            }
        };
    }
    if let Some(n) = sec.f64("n")? {
        if n < 2.0 || n.fract() != 0.0 {
            return Err(validation("solver.n", "expected an integer >= 2"));
        }
        config.n = n as usize;
    }
    if let Some(g) = sec.f64("gamma")? {
        if !(g > 0.0 && g <= 1.0) {
            return Err(validation("solver.gamma", "damping must lie in (0, 1]"));
        }
        config.gamma = g;
    }
    if let Some(m) = sec.f64("anderson_memory")? {
        if m < 0.0 || m.fract() != 0.0 {
            return Err(validation("solver.anderson_memory", "expected an integer >= 0"));
        }
        config.anderson_memory = m as usize;
    }
    if let Some(s) = sec.f64("lambda_steps")? {
        if s < 1.0 || s.fract() != 0.0 {
            return Err(validation("solver.lambda_steps", "expected an integer >= 1"));
        }
        config.lambda_steps = s as usize;
    }
    if let Some(t) = sec.f64("tol_fp")? {
        if t <= 0.0 {
            return Err(validation("solver.tol_fp", "tolerance must be positive"));
        }
        config.tol_fp = t;
    }
    if let Some(t) = sec.f64("tol_res")? {
        if t <= 0.0 {
            return Err(validation("solver.tol_res", "tolerance must be positive"));
        }
        config.tol_res = t;
    }
    if let Some(m) = sec.f64("max_iters")? {
        if m < 1.0 || m.fract() != 0.0 {
            return Err(validation("solver.max_iters", "expected an integer >= 1"));
        }
        config.max_iters = m as usize;
    }
    if let Some(s) = sec.f64("seed")? {
        if s < 0.0 || s.fract() != 0.0 {
            return Err(validation("solver.seed", "expected a nonnegative integer"));
        }
        config.seed = s as u64;
    }
    Ok(config)
}

/// Load and validate a problem document from text.
pub fn load_problem_str(text: &str) -> Result<(ProblemSpec, SolverConfig), LoadError> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| LoadError::Document(e.to_string()))?;
    for key in doc.keys() {
        if !["problem", "phi", "f", "h", "c", "hypotheses", "solver"].contains(&key.as_str()) {
            return Err(validation(key, "unknown section"));
        }
    }

    let problem = section(&doc, "problem")?
        .ok_or_else(|| validation("problem", "missing required section"))?;
    problem.check_keys(&["T", "b"])?;
    let t_end = problem.require_f64("T")?;
    if t_end <= 0.0 {
        return Err(validation("problem.T", "horizon must be positive"));
    }
    let b = problem.require_f64("b")?;
    if b == 0.0 {
        return Err(validation("problem.b", "boundary parameter must be nonzero"));
    }

    let phi = load_phi(&doc)?;

    let f_sec = section(&doc, "f")?
        .ok_or_else(|| validation("f", "missing required section"))?;
    f_sec.check_keys(&["expr"])?;
    let f_expr = parse_field_expr(&f_sec, &["t", "x", "y"])?;
    let mut spec = ProblemSpec::new(phi, b, t_end, expr_to_scalar_field(f_expr));

    if let Some(h_sec) = section(&doc, "h")? {
        h_sec.check_keys(&["expr"])?;
        let e = parse_field_expr(&h_sec, &["t"])?;
        spec = spec.with_h(expr_to_time_field(e));
    }
    if let Some(c_sec) = section(&doc, "c")? {
        c_sec.check_keys(&["expr"])?;
        let e = parse_field_expr(&c_sec, &["t"])?;
        spec = spec.with_c(expr_to_time_field(e));
    }

    if let Some(hyp) = section(&doc, "hypotheses")? {
        hyp.check_keys(&["M1", "M2", "rho"])?;
        let m1 = hyp.f64("M1")?;
        let m2 = hyp.f64("M2")?;
        match (m1, m2) {
            (Some(m1), Some(m2)) => {
                if m1 >= m2 {
                    return Err(validation("hypotheses", "requires M1 < M2"));
                }
                spec = spec.with_m_window(m1, m2);
            }
            (None, None) => {}
            _ => {
                return Err(validation(
                    "hypotheses",
                    "M1 and M2 must be given together",
                ))
            }
        }
        if let Some(rho) = hyp.f64("rho")? {
            if rho <= 0.0 {
                return Err(validation("hypotheses.rho", "radius must be positive"));
            }
            spec = spec.with_rho(rho);
        }
    }

    let config = load_solver(&doc, b, &spec.phi, spec.h.is_some(), spec.c.is_some())?;
    Ok((spec, config))
}

/// Load a problem file from disk.
pub fn load_problem(path: impl AsRef<Path>) -> Result<(ProblemSpec, SolverConfig), LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_problem_str(&text)
}
