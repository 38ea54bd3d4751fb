//! Arithmetic expressions over named variables with exact second-order
//! derivatives.
//!
//! Expressions are parsed by a small recursive-descent parser and evaluated
//! either for their value alone or as a [`Taylor2`] jet carrying the value,
//! the gradient and the (packed, symmetric) Hessian through every node.

use std::fmt;

use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("non-constant exponent at offset {offset}")]
    NonConstantExponent { offset: usize },
    #[error("domain error in {op}: `{expr}` evaluates to {value:e}")]
    Domain {
        op: &'static str,
        expr: String,
        value: f64,
    },
    #[error("point has {got} coordinates, function expects {expected}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "ln" => Some(UnaryOp::Ln),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression tree. `Pow` carries its exponent as a constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

impl Expr {
    /// Number of non-leaf nodes.
    pub fn interior_node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.interior_node_count(),
            Expr::Binary(_, a, b) => 1 + a.interior_node_count() + b.interior_node_count(),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn write_with(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => f.write_str(&names[*i]),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("(-")?;
                a.write_with(names, f)?;
                f.write_str(")")
            }
            Expr::Unary(op, a) => {
                write!(f, "{}(", op.name())?;
                a.write_with(names, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, a, b) => {
                f.write_str("(")?;
                a.write_with(names, f)?;
                write!(f, " {} ", op.symbol())?;
                b.write_with(names, f)?;
                f.write_str(")")
            }
            Expr::Pow(a, p) => {
                f.write_str("(")?;
                a.write_with(names, f)?;
                write!(f, "^{p:?})")
            }
        }
    }
}

/// A parsed scalar function of `arity` named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    names: Vec<String>,
    root: Expr,
}

impl ScalarFunction {
    pub fn new(names: Vec<String>, root: Expr) -> Result<Self, ExprError> {
        if let Some(i) = root.max_var() {
            if i >= names.len() {
                return Err(ExprError::Arity {
                    expected: names.len(),
                    got: i + 1,
                });
            }
        }
        Ok(ScalarFunction { names, root })
    }

    pub fn constant(names: Vec<String>, value: f64) -> Self {
        ScalarFunction {
            names,
            root: Expr::Const(value),
        }
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.check_arity(x)?;
        Evaluator { names: &self.names }.value(&self.root, x)
    }

    pub fn eval_jet(&self, x: &[f64]) -> Result<Taylor2, ExprError> {
        self.check_arity(x)?;
        Evaluator { names: &self.names }.jet(&self.root, x)
    }

    fn check_arity(&self, x: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.arity() {
            return Err(ExprError::Arity {
                expected: self.arity(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write_with(&self.names, f)
    }
}

/// Value, gradient and Hessian of a function at a point.
///
/// The Hessian is stored as its packed lower triangle, so symmetry holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor2 {
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl Taylor2 {
    pub fn constant(n: usize, value: f64) -> Self {
        Taylor2 {
            value,
            gradient: vec![0.0; n],
            hessian: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn variable(n: usize, index: usize, value: f64) -> Self {
        let mut t = Taylor2::constant(n, value);
        t.gradient[index] = 1.0;
        t
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hessian[packed(i, j)]
    }

    pub fn hessian_matrix(&self) -> Matrix {
        let n = self.gradient.len();
        Matrix::from_fn(n, n, |i, j| self.hessian(i, j))
    }

    fn dim(&self) -> usize {
        self.gradient.len()
    }

    fn zip(&self, other: &Taylor2, op: impl Fn(f64, f64) -> f64) -> Taylor2 {
        Taylor2 {
            value: op(self.value, other.value),
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(a, b)| op(*a, *b))
                .collect(),
            hessian: self
                .hessian
                .iter()
                .zip(&other.hessian)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        }
    }

    fn add(&self, other: &Taylor2) -> Taylor2 {
        self.zip(other, |a, b| a + b)
    }

    fn sub(&self, other: &Taylor2) -> Taylor2 {
        self.zip(other, |a, b| a - b)
    }

    fn neg(&self) -> Taylor2 {
        Taylor2 {
            value: -self.value,
            gradient: self.gradient.iter().map(|g| -g).collect(),
            hessian: self.hessian.iter().map(|h| -h).collect(),
        }
    }

    fn mul(&self, other: &Taylor2) -> Taylor2 {
        let n = self.dim();
        let (a, b) = (self.value, other.value);
        let (ga, gb) = (&self.gradient, &other.gradient);
        let mut hessian = Vec::with_capacity(self.hessian.len());
        for i in 0..n {
            for j in 0..=i {
                let k = packed(i, j);
                hessian.push(
                    a * other.hessian[k] + b * self.hessian[k] + ga[i] * gb[j] + gb[i] * ga[j],
                );
            }
        }
        Taylor2 {
            value: a * b,
            gradient: ga.iter().zip(gb).map(|(x, y)| a * y + b * x).collect(),
            hessian,
        }
    }

    /// Composition `phi(self)` given `phi`, `phi'` and `phi''` at the value.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Taylor2 {
        let n = self.dim();
        let g = &self.gradient;
        let mut hessian = Vec::with_capacity(self.hessian.len());
        for i in 0..n {
            for j in 0..=i {
                hessian.push(f1 * self.hessian[packed(i, j)] + f2 * g[i] * g[j]);
            }
        }
        Taylor2 {
            value: f0,
            gradient: g.iter().map(|x| f1 * x).collect(),
            hessian,
        }
    }
}

/// Small arithmetic helpers shared by the value and jet evaluators.
trait Field: Sized + Clone {
    fn one_like(&self) -> Self;
    fn times(&self, other: &Self) -> Self;
}

impl Field for f64 {
    fn one_like(&self) -> Self {
        1.0
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl Field for Taylor2 {
    fn one_like(&self) -> Self {
        Taylor2::constant(self.dim(), 1.0)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
}

/// `base^k` for `k >= 0` by repeated multiplication (squaring above 16).
fn int_power<T: Field>(base: &T, k: u64) -> T {
    if k == 0 {
        return base.one_like();
    }
    if k <= 16 {
        let mut acc = base.clone();
        for _ in 1..k {
            acc = acc.times(base);
        }
        return acc;
    }
    let half = int_power(base, k / 2);
    let sq = half.times(&half);
    if k % 2 == 1 {
        sq.times(base)
    } else {
        sq
    }
}

fn integer_exponent(p: f64) -> Option<i64> {
    if p.fract() == 0.0 && p.abs() <= 1e15 {
        Some(p as i64)
    } else {
        None
    }
}

struct Evaluator<'a> {
    names: &'a [String],
}

impl Evaluator<'_> {
    fn domain(&self, op: &'static str, e: &Expr, value: f64) -> ExprError {
        ExprError::Domain {
            op,
            expr: ScalarFunction {
                names: self.names.to_vec(),
                root: e.clone(),
            }
            .to_string(),
            value,
        }
    }

    fn value(&self, e: &Expr, x: &[f64]) -> Result<f64, ExprError> {
        Ok(match e {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Unary(op, a) => {
                let u = self.value(a, x)?;
                match op {
                    UnaryOp::Neg => -u,
                    UnaryOp::Sin => u.sin(),
                    UnaryOp::Cos => u.cos(),
                    UnaryOp::Exp => u.exp(),
                    UnaryOp::Ln => {
                        if u <= 0.0 {
                            return Err(self.domain("ln", a, u));
                        }
                        u.ln()
                    }
                    UnaryOp::Sqrt => {
                        if u <= 0.0 {
                            return Err(self.domain("sqrt", a, u));
                        }
                        u.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let (u, v) = (self.value(a, x)?, self.value(b, x)?);
                match op {
                    BinaryOp::Add => u + v,
                    BinaryOp::Sub => u - v,
                    BinaryOp::Mul => u * v,
                    BinaryOp::Div => {
                        if v == 0.0 {
                            return Err(self.domain("division", b, v));
                        }
                        u / v
                    }
                }
            }
            Expr::Pow(a, p) => {
                let u = self.value(a, x)?;
                match integer_exponent(*p) {
                    Some(k) if k >= 0 => int_power(&u, k as u64),
                    Some(k) => {
                        if u == 0.0 {
                            return Err(self.domain("negative power", a, u));
                        }
                        1.0 / int_power(&u, k.unsigned_abs())
                    }
                    None => {
                        if u <= 0.0 {
                            return Err(self.domain("real power", a, u));
                        }
                        u.powf(*p)
                    }
                }
            }
        })
    }

    fn jet(&self, e: &Expr, x: &[f64]) -> Result<Taylor2, ExprError> {
        let n = x.len();
        Ok(match e {
            Expr::Const(c) => Taylor2::constant(n, *c),
            Expr::Var(i) => Taylor2::variable(n, *i, x[*i]),
            Expr::Unary(op, a) => {
                let t = self.jet(a, x)?;
                let u = t.value;
                match op {
                    UnaryOp::Neg => t.neg(),
                    UnaryOp::Sin => t.chain(u.sin(), u.cos(), -u.sin()),
                    UnaryOp::Cos => t.chain(u.cos(), -u.sin(), -u.cos()),
                    UnaryOp::Exp => {
                        let ex = u.exp();
                        t.chain(ex, ex, ex)
                    }
                    UnaryOp::Ln => {
                        if u <= 0.0 {
                            return Err(self.domain("ln", a, u));
                        }
                        t.chain(u.ln(), 1.0 / u, -1.0 / (u * u))
                    }
                    UnaryOp::Sqrt => {
                        if u <= 0.0 {
                            return Err(self.domain("sqrt", a, u));
                        }
                        let s = u.sqrt();
                        t.chain(s, 0.5 / s, -0.25 / (s * u))
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let (ta, tb) = (self.jet(a, x)?, self.jet(b, x)?);
                match op {
                    BinaryOp::Add => ta.add(&tb),
                    BinaryOp::Sub => ta.sub(&tb),
                    BinaryOp::Mul => ta.mul(&tb),
                    BinaryOp::Div => {
                        let v = tb.value;
                        if v == 0.0 {
                            return Err(self.domain("division", b, v));
                        }
                        ta.mul(&tb.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
                    }
                }
            }
            Expr::Pow(a, p) => {
                let t = self.jet(a, x)?;
                let u = t.value;
                match integer_exponent(*p) {
                    Some(k) if k >= 0 => int_power(&t, k as u64),
                    Some(k) => {
                        if u == 0.0 {
                            return Err(self.domain("negative power", a, u));
                        }
                        let pos = int_power(&t, k.unsigned_abs());
                        let v = pos.value;
                        pos.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
                    }
                    None => {
                        if u <= 0.0 {
                            return Err(self.domain("real power", a, u));
                        }
                        let p = *p;
                        t.chain(
                            u.powf(p),
                            p * u.powf(p - 1.0),
                            p * (p - 1.0) * u.powf(p - 2.0),
                        )
                    }
                }
            }
        })
    }
}

/// Largest deviation between the analytic derivatives and central
/// differences, measured as `|analytic - fd| / (1 + |analytic|)`.
///
/// Gradient entries are differenced from values, Hessian entries from the
/// analytic gradient; both are second-order accurate in `h`.
pub fn fd_check(f: &ScalarFunction, x: &[f64], h: f64) -> Result<f64, ExprError> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let jet = f.eval_jet(x)?;
    let n = x.len();
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for k in 0..n {
        probe[k] = x[k] + h;
        let plus = f.eval_jet(&probe)?;
        probe[k] = x[k] - h;
        let minus = f.eval_jet(&probe)?;
        probe[k] = x[k];

        let g_fd = (plus.value - minus.value) / (2.0 * h);
        let g = jet.gradient[k];
        worst = worst.max((g - g_fd).abs() / (1.0 + g.abs()));
        for i in 0..n {
            let h_fd = (plus.gradient[i] - minus.gradient[i]) / (2.0 * h);
            let an = jet.hessian(i, k);
            worst = worst.max((an - h_fd).abs() / (1.0 + an.abs()));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Parsing

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
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn unexpected(&self) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            message: format!("unexpected {}", self.peek()),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let p = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    /// `-`? number (`^` exponent)?, folded right-associatively.
    fn exponent(&mut self) -> Result<f64, ExprError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let base = match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                v
            }
            Tok::Ident(_) | Tok::LParen => {
                return Err(ExprError::NonConstantExponent {
                    offset: self.offset(),
                })
            }
            _ => return Err(self.unexpected()),
        };
        let base = if negative { -base } else { base };
        if *self.peek() == Tok::Caret {
            self.bump();
            let rest = self.exponent()?;
            return Ok(base.powf(rest));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let op = UnaryOp::from_name(&name)
                        .ok_or(ExprError::UnknownIdentifier { name, offset })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Expr::Var(i))
                } else if name == "pi" {
                    Ok(Expr::Const(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownIdentifier { name, offset })
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(ExprError::Syntax {
                offset: self.offset(),
                message: format!("expected `)`, found {}", self.peek()),
            })
        }
    }
}

/// Parse `source` over the ordered variable list `vars`.
pub fn parse<S: AsRef<str>>(source: &str, vars: &[S]) -> Result<ScalarFunction, ExprError> {
    let names: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars: &names,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(ScalarFunction { names, root })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XS: [&str; 3] = ["x1", "x2", "x3"];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn variable_lookup() {
        let f = parse("x3", &XS).unwrap();
        assert_eq!(*f.root(), Expr::Var(2));
    }

    #[test]
    fn arutyunov_surface_value() {
        let f = parse("2*sqrt(3)*x1*x2 - 2*x2^2 - x3", &XS).unwrap();
        let v = f.eval(&[1.0, 1.0, 0.0]).unwrap();
        assert!(close(v, 2.0 * 3f64.sqrt() - 2.0, 1e-15));
        assert!(close(v, 1.4641016, 1e-7));
        // sqrt, three products, power, product, two subtractions
        assert_eq!(f.root().interior_node_count(), 8);
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("x1 +* x2", &XS).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_and_exponent() {
        assert!(matches!(
            parse("x1 + y", &XS).unwrap_err(),
            ExprError::UnknownIdentifier { offset: 5, .. }
        ));
        assert!(matches!(
            parse("tan(x1)", &XS).unwrap_err(),
            ExprError::UnknownIdentifier { offset: 0, .. }
        ));
        assert!(matches!(
            parse("x1^x2", &XS).unwrap_err(),
            ExprError::NonConstantExponent { offset: 3 }
        ));
        assert!(matches!(
            parse("(x1 + 2", &XS).unwrap_err(),
            ExprError::Syntax { offset: 7, .. }
        ));
        assert!(parse("", &XS).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("-x1^2 + 2^3^2 - 8/4/2", &XS).unwrap();
        // -(x1^2) + 2^9 - (8/4)/2
        assert_eq!(f.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0 + 512.0 - 1.0);
        let g = parse("x1^-2 + pi", &XS).unwrap();
        assert!(close(
            g.eval(&[2.0, 0.0, 0.0]).unwrap(),
            0.25 + std::f64::consts::PI,
            1e-15
        ));
    }

    #[test]
    fn cosine_constraint_jet() {
        let f = parse("cos(x1+x2)-x3-1", &XS).unwrap();
        let t = f.eval_jet(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.value(), 0.0);
        assert_eq!(t.gradient(), &[0.0, 0.0, -1.0]);
        let h = t.hessian_matrix();
        let expect = [[-1.0, -1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn bilinear_constraint_jet() {
        let f = parse("x1*x2-x3", &XS).unwrap();
        let t = f.eval_jet(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.value(), 0.0);
        assert_eq!(t.gradient(), &[0.0, 0.0, -1.0]);
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(t.hessian(i, j), e);
            }
        }
    }

    #[test]
    fn linear_function_jet() {
        let f = parse("x1", &XS).unwrap();
        let t = f.eval_jet(&[0.3, -2.0, 7.0]).unwrap();
        assert_eq!(t.gradient(), &[1.0, 0.0, 0.0]);
        assert!(t.hessian.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn quotient_and_transcendental_jets() {
        // f = exp(x1) / x2 + ln(x1) * sqrt(x2)
        let f = parse("exp(x1)/x2 + ln(x1)*sqrt(x2) + x1^1.5", &["x1", "x2"]).unwrap();
        let (a, b) = (0.7, 1.9);
        let t = f.eval_jet(&[a, b]).unwrap();
        let v = a.exp() / b + a.ln() * b.sqrt() + a.powf(1.5);
        assert!(close(t.value(), v, 1e-14));
        let fx = a.exp() / b + b.sqrt() / a + 1.5 * a.sqrt();
        let fy = -a.exp() / (b * b) + a.ln() * 0.5 / b.sqrt();
        let fxx = a.exp() / b - b.sqrt() / (a * a) + 0.75 / a.sqrt();
        let fxy = -a.exp() / (b * b) + 0.5 / (a * b.sqrt());
        let fyy = 2.0 * a.exp() / (b * b * b) - 0.25 * a.ln() / (b * b.sqrt());
        assert!(close(t.gradient()[0], fx, 1e-13));
        assert!(close(t.gradient()[1], fy, 1e-13));
        assert!(close(t.hessian(0, 0), fxx, 1e-13));
        assert!(close(t.hessian(0, 1), fxy, 1e-13));
        assert!(close(t.hessian(1, 1), fyy, 1e-13));
    }

    #[test]
    fn domain_errors_name_subexpression() {
        let f = parse("ln(x1 - 1)", &XS).unwrap();
        match f.eval_jet(&[0.5, 0.0, 0.0]).unwrap_err() {
            ExprError::Domain { op, expr, .. } => {
                assert_eq!(op, "ln");
                assert_eq!(expr, "(x1 - 1.0)");
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(parse("1/x2", &XS)
            .unwrap()
            .eval(&[0.0, 0.0, 0.0])
            .is_err());
        assert!(parse("sqrt(x1)", &XS)
            .unwrap()
            .eval_jet(&[0.0, 0.0, 0.0])
            .is_err());
        assert!(matches!(
            parse("x1", &XS).unwrap().eval(&[1.0]),
            Err(ExprError::Arity { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn fd_check_examples() {
        let poly = parse("x1^3*x2 - 4*x2^2*x3 + x3^4 - 2", &XS).unwrap();
        assert!(fd_check(&poly, &[0.4, -0.8, 0.9], 1e-4).unwrap() <= 1e-6);
        let s = parse("sin(x1)", &["x1"]).unwrap();
        assert!(fd_check(&s, &[0.3], 1e-4).unwrap() <= 1e-7);
        let c = parse("3.5", &XS).unwrap();
        assert_eq!(fd_check(&c, &[0.1, 0.2, 0.3], 1e-4).unwrap(), 0.0);
    }
}
