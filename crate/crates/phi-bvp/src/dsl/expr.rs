//! A small arithmetic expression language for the problem right-hand sides.
//!
//! Grammar (precedence low to high): `+ -`, `* /`, unary `-`, `^`
//! (right-associative; `-2^2` is `-(2^2)`). Functions: exp, sin, cos, tanh,
//! abs, sign, ln, sqrt and the two-argument pow.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("`{name}` takes {expected} argument(s), got {got} (line {line}, column {col})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Tanh,
    Abs,
    Sign,
    Ln,
    Sqrt,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Evaluate with variables bound by name.
    pub fn eval(&self, env: &[(&str, f64)]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => env
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let mut vals = [0.0f64; 2];
                for (i, a) in args.iter().enumerate() {
                    vals[i] = a.eval(env)?;
                }
                match func {
                    Func::Exp => vals[0].exp(),
                    Func::Sin => vals[0].sin(),
                    Func::Cos => vals[0].cos(),
                    Func::Tanh => vals[0].tanh(),
                    Func::Abs => vals[0].abs(),
                    Func::Sign => {
                        if vals[0] > 0.0 {
                            1.0
                        } else if vals[0] < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Ln => vals[0].ln(),
                    Func::Sqrt => vals[0].sqrt(),
                    Func::Pow => vals[0].powf(vals[1]),
                }
            }
        })
    }

    /// Free variables, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                paren(f, e, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec, right_assoc) = match op {
                    BinOp::Add => ("+", 1, false),
                    BinOp::Sub => ("-", 1, false),
                    BinOp::Mul => ("*", 2, false),
                    BinOp::Div => ("/", 2, false),
                    BinOp::Pow => ("^", 4, true),
                };
                if right_assoc {
                    paren(f, a, prec + 1)?;
                    write!(f, " {sym} ")?;
                    paren(f, b, prec)
                } else {
                    paren(f, a, prec)?;
                    write!(f, " {sym} ")?;
                    paren(f, b, prec + 1)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.bump();
            }
            if self.pos >= self.src.len() {
                out.push((Tok::End, self.line, self.col));
                return Ok(out);
            }
            let (line, col) = (self.line, self.col);
            let c = self.src[self.pos];
            let tok = match c {
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'^' => {
                    self.bump();
                    Tok::Caret
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'0'..=b'9' | b'.' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                    {
                        self.bump();
                    }
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
                    {
                        let mark = self.pos;
                        self.bump();
                        if self.pos < self.src.len()
                            && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                        {
                            self.bump();
                        }
                        if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit()
                            {
                                self.bump();
                            }
                        } else {
                            // not an exponent after all
                            self.pos = mark;
                            self.col = col + (mark - start);
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                        line,
                        col,
                        expected: "a number".to_string(),
                        found: format!("`{text}`"),
                    })?;
                    Tok::Num(v)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric()
                            || self.src[self.pos] == b'_')
                    {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Tok::Ident(text.to_string())
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        expected: "an operator, number or identifier".to_string(),
                        found: format!("`{}`", other as char),
                    })
                }
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    allowed_vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &(Tok, usize, usize) {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> (Tok, usize, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, expected: &str) -> Result<(), ParseError> {
        let (tok, line, col) = self.advance();
        if &tok == want {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                line,
                col,
                expected: expected.to_string(),
                found: tok.to_string(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match &self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match &self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek().0, Tok::Minus) {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().0, Tok::Caret) {
            self.advance();
            // right-associative; the exponent may carry a unary minus
            let exponent = self.unary_for_exponent()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary_for_exponent(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek().0, Tok::Minus) {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary_for_exponent()?)));
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, line, col) = self.advance();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if matches!(self.peek().0, Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        ParseError::UnknownIdentifier {
                            name: name.clone(),
                            line,
                            col,
                        }
                    })?;
                    self.advance();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek().0, Tok::Comma) {
                        self.advance();
                        args.push(self.expr()?);
                    }
                    self.expect(&Tok::RParen, "`)`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name: name.clone(),
                            expected: func.arity(),
                            got: args.len(),
                            line,
                            col,
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    if !self.allowed_vars.contains(&name.as_str()) {
                        return Err(ParseError::UnknownIdentifier { name, line, col });
                    }
                    Ok(Expr::Var(name))
                }
            }
            other => Err(ParseError::Syntax {
                line,
                col,
                expected: "a number, variable or `(`".to_string(),
                found: other.to_string(),
            }),
        }
    }
}

/// Parse `source` with the given set of allowed variable names.
pub fn parse_expression(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    let toks = Lexer::new(source).tokens()?;
    let mut parser = Parser {
        toks,
        pos: 0,
        allowed_vars,
    };
    let expr = parser.expr()?;
    let (tok, line, col) = parser.advance();
    if tok != Tok::End {
        return Err(ParseError::Syntax {
            line,
            col,
            expected: "end of input".to_string(),
            found: tok.to_string(),
        });
    }
    Ok(expr)
}
