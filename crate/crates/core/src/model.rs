//! Nonlinear program container, problem-file loader and the analysis of a
//! candidate point (active set, active Jacobian, critical subspace).

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::expr::{self, ExprError, ScalarFunction, Taylor2};
use crate::linalg::{self, LinalgError, Matrix, SvdResult};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("arity mismatch: {what} has {got} entries, expected {expected}")]
    Arity {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("infeasible point: {constraint} = {value:e} violates tolerance {tol:e}")]
    Infeasible {
        constraint: String,
        value: f64,
        tol: f64,
    },
    #[error("svd oracle entry {entry} is outside the {rows}x{cols} factor shape")]
    OracleShape {
        entry: String,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Numeric tolerances shared by the analysis stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|g_j(x*)| <= active` marks constraint `j` active.
    pub active: f64,
    /// Largest admissible `|h_i(x*)|` and `g_j(x*)`.
    pub feasibility: f64,
    pub rank_rel: f64,
    pub rank_abs: f64,
    /// Scaled PSD tolerance: `λmin >= -psd * (1 + ‖M‖_F)`.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            active: 1e-8,
            feasibility: 1e-8,
            rank_rel: linalg::DEFAULT_RANK_REL_TOL,
            rank_abs: linalg::DEFAULT_RANK_ABS_TOL,
            psd: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn psd_threshold(&self, m: &Matrix) -> f64 {
        -self.psd * (1.0 + m.frobenius_norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub function: ScalarFunction,
}

/// Entrywise functions of a user-supplied factorization `J(x) = U(x) Σ(x) V(x)ᵀ`
/// of the active Jacobian, in the row order used by [`StationaryPointAnalysis`].
/// Indices are zero-based; missing entries are the constant 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvdOracle {
    pub u: BTreeMap<(usize, usize), ScalarFunction>,
    pub sigma: BTreeMap<usize, ScalarFunction>,
    pub v: BTreeMap<(usize, usize), ScalarFunction>,
}

/// The oracle factors evaluated at a point.
#[derive(Debug, Clone)]
pub struct OracleFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl OracleFactors {
    pub fn product(&self) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        Matrix::from_fn(m, n, |i, j| {
            self.sigma
                .iter()
                .enumerate()
                .map(|(k, s)| self.u[(i, k)] * s * self.v[(j, k)])
                .sum()
        })
    }
}

impl SvdOracle {
    pub fn is_empty(&self) -> bool {
        self.u.is_empty() && self.sigma.is_empty() && self.v.is_empty()
    }

    /// Labelled entries in a stable order (`U`, then `sigma`, then `V`),
    /// with one-based indices in the labels.
    pub fn entries(&self) -> Vec<(String, &ScalarFunction)> {
        let mut out = Vec::new();
        for ((i, j), f) in &self.u {
            out.push((format!("U[{},{}]", i + 1, j + 1), f));
        }
        for (k, f) in &self.sigma {
            out.push((format!("sigma[{}]", k + 1), f));
        }
        for ((i, j), f) in &self.v {
            out.push((format!("V[{},{}]", i + 1, j + 1), f));
        }
        out
    }

    /// Checks that every declared entry fits an `rows x cols` Jacobian.
    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<(), ModelError> {
        let k = rows.min(cols);
        let bad = |entry: String| ModelError::OracleShape { entry, rows, cols };
        if let Some(((i, j), _)) = self.u.iter().find(|((i, j), _)| *i >= rows || *j >= rows) {
            return Err(bad(format!("U[{},{}]", i + 1, j + 1)));
        }
        if let Some((s, _)) = self.sigma.iter().find(|(s, _)| **s >= k) {
            return Err(bad(format!("sigma[{}]", s + 1)));
        }
        if let Some(((i, j), _)) = self.v.iter().find(|((i, j), _)| *i >= cols || *j >= cols) {
            return Err(bad(format!("V[{},{}]", i + 1, j + 1)));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64], rows: usize, cols: usize) -> Result<OracleFactors, ModelError> {
        self.check_shape(rows, cols)?;
        let mut u = Matrix::zeros(rows, rows);
        for ((i, j), f) in &self.u {
            u[(*i, *j)] = f.eval(x)?;
        }
        let mut sigma = vec![0.0; rows.min(cols)];
        for (k, f) in &self.sigma {
            sigma[*k] = f.eval(x)?;
        }
        let mut v = Matrix::zeros(cols, cols);
        for ((i, j), f) in &self.v {
            v[(*i, *j)] = f.eval(x)?;
        }
        Ok(OracleFactors { u, sigma, v })
    }
}

/// `min f(x)` subject to `h_i(x) = 0`, `g_j(x) <= 0`, with a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub struct NlpProblem {
    pub name: String,
    pub vars: Vec<String>,
    pub point: Vec<f64>,
    pub objective: ScalarFunction,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub oracle: Option<SvdOracle>,
}

impl NlpProblem {
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        point: Vec<f64>,
        objective: ScalarFunction,
        equalities: Vec<Constraint>,
        inequalities: Vec<Constraint>,
        oracle: Option<SvdOracle>,
    ) -> Result<Self, ModelError> {
        let n = vars.len();
        let mut seen = HashSet::new();
        for v in &vars {
            if !seen.insert(v.clone()) {
                return Err(ModelError::Duplicate(v.clone()));
            }
        }
        if point.len() != n {
            return Err(ModelError::Arity {
                what: "point".into(),
                expected: n,
                got: point.len(),
            });
        }
        let mut names = HashSet::new();
        let check = |what: &str, f: &ScalarFunction| {
            if f.arity() != n {
                Err(ModelError::Arity {
                    what: what.to_string(),
                    expected: n,
                    got: f.arity(),
                })
            } else {
                Ok(())
            }
        };
        check("objective", &objective)?;
        for c in equalities.iter().chain(&inequalities) {
            check(&c.name, &c.function)?;
            if !names.insert(c.name.clone()) {
                return Err(ModelError::Duplicate(c.name.clone()));
            }
        }
        if let Some(o) = &oracle {
            for (label, f) in o.entries() {
                check(&label, f)?;
            }
        }
        Ok(NlpProblem {
            name: name.into(),
            vars,
            point,
            objective,
            equalities,
            inequalities,
            oracle,
        })
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .find(|c| c.name == name)
    }

    /// Functions whose gradients form the rows of `J`: equalities first,
    /// then the listed inequalities in the given order.
    pub fn row_functions<'a>(&'a self, active: &'a [usize]) -> impl Iterator<Item = &'a Constraint> {
        self.equalities
            .iter()
            .chain(active.iter().map(move |&j| &self.inequalities[j]))
    }

    /// Jacobian of the equalities and the listed inequalities at `x`.
    pub fn jacobian_at(&self, active: &[usize], x: &[f64]) -> Result<Matrix, ExprError> {
        let n = self.dim();
        let mut rows = Vec::new();
        for c in self.row_functions(active) {
            rows.push(c.function.eval_jet(x)?.gradient().to_vec());
        }
        Ok(Matrix::from_rows(&rows, n))
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

/// Parses the line-oriented problem format.
pub fn parse_problem(text: &str) -> Result<NlpProblem, ModelError> {
    let mut name: Option<String> = None;
    let mut vars: Option<Vec<String>> = None;
    let mut point: Option<(usize, Vec<f64>)> = None;
    let mut objective: Option<ScalarFunction> = None;
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    let mut oracle = SvdOracle::default();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| ModelError::Line {
            line: line_no,
            message,
        };
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let (keyword, rest) = split_word(content);
        let need_vars = || -> Result<&Vec<String>, ModelError> {
            vars.as_ref()
                .ok_or_else(|| err("`vars` must be declared before expressions".into()))
        };
        let parse_expr = |src: &str, vars: &[String]| -> Result<ScalarFunction, ModelError> {
            let column = src.as_ptr() as usize - raw.as_ptr() as usize;
            expr::parse(src, vars).map_err(|e| {
                let e = match e {
                    ExprError::Syntax { offset, message } => ExprError::Syntax {
                        offset: offset + column,
                        message,
                    },
                    ExprError::UnknownIdentifier { name, offset } => {
                        ExprError::UnknownIdentifier {
                            name,
                            offset: offset + column,
                        }
                    }
                    ExprError::NonConstantExponent { offset } => ExprError::NonConstantExponent {
                        offset: offset + column,
                    },
                    other => other,
                };
                err(e.to_string())
            })
        };
        let parse_index = |s: &str| -> Result<usize, ModelError> {
            match s.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(err(format!("expected a 1-based index, found `{s}`"))),
            }
        };

        match keyword {
            "problem" => {
                if name.is_some() {
                    return Err(err("duplicate `problem` declaration".into()));
                }
                let (id, tail) = split_word(rest);
                if !is_ident(id) || !tail.is_empty() {
                    return Err(err(format!("expected a problem identifier, found `{rest}`")));
                }
                name = Some(id.to_string());
            }
            "vars" => {
                if vars.is_some() {
                    return Err(err("duplicate `vars` declaration".into()));
                }
                let list: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if list.is_empty() {
                    return Err(err("`vars` needs at least one identifier".into()));
                }
                let mut seen = HashSet::new();
                for v in &list {
                    if !is_ident(v) || v == "pi" {
                        return Err(err(format!("invalid variable name `{v}`")));
                    }
                    if !seen.insert(v) {
                        return Err(ModelError::Duplicate(v.clone()));
                    }
                }
                vars = Some(list);
            }
            "point" => {
                if point.is_some() {
                    return Err(err("duplicate `point` declaration".into()));
                }
                let values = rest
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(format!("invalid number `{t}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                point = Some((line_no, values));
            }
            "objective" => {
                if objective.is_some() {
                    return Err(err("duplicate `objective` declaration".into()));
                }
                objective = Some(parse_expr(rest, need_vars()?)?);
            }
            "eq" | "le" => {
                let (id, body) = split_word(rest);
                if !is_ident(id) {
                    return Err(err(format!("expected a constraint name, found `{id}`")));
                }
                if body.is_empty() {
                    return Err(err(format!("constraint `{id}` has no expression")));
                }
                let c = Constraint {
                    name: id.to_string(),
                    function: parse_expr(body, need_vars()?)?,
                };
                if keyword == "eq" {
                    equalities.push(c);
                } else {
                    inequalities.push(c);
                }
            }
            "svd_u" | "svd_v" => {
                let (i, r1) = split_word(rest);
                let (j, body) = split_word(r1);
                let key = (parse_index(i)?, parse_index(j)?);
                let f = parse_expr(body, need_vars()?)?;
                let map = if keyword == "svd_u" {
                    &mut oracle.u
                } else {
                    &mut oracle.v
                };
                if map.insert(key, f).is_some() {
                    return Err(err(format!("duplicate {keyword} entry ({i}, {j})")));
                }
            }
            "svd_sigma" => {
                let (k, body) = split_word(rest);
                let key = parse_index(k)?;
                let f = parse_expr(body, need_vars()?)?;
                if oracle.sigma.insert(key, f).is_some() {
                    return Err(err(format!("duplicate svd_sigma entry {k}")));
                }
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }

    let name = name.ok_or(ModelError::Missing("problem"))?;
    let vars = vars.ok_or(ModelError::Missing("vars"))?;
    let (point_line, point) = point.ok_or(ModelError::Missing("point"))?;
    if point.len() != vars.len() {
        return Err(ModelError::Line {
            line: point_line,
            message: format!(
                "arity mismatch: point has {} coordinates but {} variables are declared",
                point.len(),
                vars.len()
            ),
        });
    }
    let objective = objective.ok_or(ModelError::Missing("objective"))?;
    let oracle = (!oracle.is_empty()).then_some(oracle);
    NlpProblem::new(name, vars, point, objective, equalities, inequalities, oracle)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<NlpProblem, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text)
}

/// Which constraint a row of the active Jacobian comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Equality(usize),
    Inequality(usize),
}

#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub name: String,
    pub kind: RowKind,
    pub jet: Taylor2,
}

/// Everything derived from the problem at `x*` that later stages need.
#[derive(Debug, Clone)]
pub struct StationaryPointAnalysis {
    pub point: Vec<f64>,
    /// `max(‖h(x*)‖_∞, max_j g_j(x*), 0)`
    pub feasibility_residual: f64,
    /// Zero-based indices of active inequalities, ascending.
    pub active_set: Vec<usize>,
    pub objective: Taylor2,
    /// Equality rows first, then active inequality rows.
    pub rows: Vec<ConstraintRow>,
    pub num_equalities: usize,
    pub jacobian: Matrix,
    pub jacobian_svd: SvdResult,
    pub rank: usize,
    /// Orthonormal basis of `Ker(J(x*))`, the critical subspace.
    pub critical_basis: Matrix,
    /// Orthonormal basis of `Ker(J(x*)ᵀ)`.
    pub left_kernel: Matrix,
    pub tolerances: Tolerances,
}

impl StationaryPointAnalysis {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Number of multiplier coordinates, `m + |A(x*)|`.
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn critical_dim(&self) -> usize {
        self.critical_basis.cols()
    }

    pub fn grad_objective(&self) -> &[f64] {
        self.objective.gradient()
    }

    pub fn hessians(&self) -> HessianSet {
        HessianSet {
            objective: self.objective.hessian_matrix(),
            rows: self.rows.iter().map(|r| r.jet.hessian_matrix()).collect(),
        }
    }

    /// `∇²f + Σ λ_i ∇²h_i + Σ_{j∈A} μ_j ∇²g_j` at `x*`.
    pub fn lagrangian_hessian(&self, lambda: &[f64], mu_active: &[f64]) -> Result<Matrix, ModelError> {
        if lambda.len() != self.num_equalities {
            return Err(ModelError::Arity {
                what: "equality multipliers".into(),
                expected: self.num_equalities,
                got: lambda.len(),
            });
        }
        if mu_active.len() != self.active_set.len() {
            return Err(ModelError::Arity {
                what: "active inequality multipliers".into(),
                expected: self.active_set.len(),
                got: mu_active.len(),
            });
        }
        let nu: Vec<f64> = lambda.iter().chain(mu_active).copied().collect();
        Ok(self.hessians().at(&nu))
    }

    /// `‖J(x*)ᵀ ν + ∇f(x*)‖_∞`
    pub fn stationarity_residual(&self, nu: &[f64]) -> f64 {
        let mut r = self.jacobian.tr_matvec(nu);
        for (ri, g) in r.iter_mut().zip(self.grad_objective()) {
            *ri += g;
        }
        r.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn row_labels(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.name.clone()).collect()
    }
}

/// Hessians of the objective and of each row function of `J`; the
/// Lagrangian Hessian is affine in the multiplier.
#[derive(Debug, Clone)]
pub struct HessianSet {
    pub objective: Matrix,
    pub rows: Vec<Matrix>,
}

impl HessianSet {
    /// `w0 ∇²f + Σ ν_k ∇²c_k`
    pub fn combine(&self, w0: f64, nu: &[f64]) -> Matrix {
        assert_eq!(nu.len(), self.rows.len(), "multiplier arity");
        let mut h = self.objective.scaled(w0);
        for (w, hk) in nu.iter().zip(&self.rows) {
            if *w != 0.0 {
                h.add_scaled(*w, hk);
            }
        }
        h
    }

    pub fn at(&self, nu: &[f64]) -> Matrix {
        self.combine(1.0, nu)
    }

    /// The same set restricted to `span(basis)`.
    pub fn restrict(&self, basis: &Matrix) -> HessianSet {
        HessianSet {
            objective: self.objective.congruence(basis),
            rows: self.rows.iter().map(|h| h.congruence(basis)).collect(),
        }
    }

    /// `(dᵀ∇²f d, [dᵀ∇²c_k d]_k)`: the multiplier-space functional of a direction.
    pub fn direction_functional(&self, d: &[f64]) -> (f64, Vec<f64>) {
        (
            self.objective.quadratic_form(d),
            self.rows.iter().map(|h| h.quadratic_form(d)).collect(),
        )
    }
}

/// Active set, active Jacobian, rank and critical subspace at the candidate
/// point. Fails if the point is infeasible or some inequality value lies
/// strictly between the active and feasibility tolerances.
pub fn analyze_point(p: &NlpProblem, tol: &Tolerances) -> Result<StationaryPointAnalysis, ModelError> {
    let x = &p.point;
    let n = p.dim();
    let mut residual: f64 = 0.0;
    let mut worst: Option<(String, f64, f64)> = None;
    for c in &p.equalities {
        let v = c.function.eval(x)?;
        residual = residual.max(v.abs());
        if v.abs() > tol.feasibility && worst.as_ref().is_none_or(|(_, w, _)| v.abs() > w.abs()) {
            worst = Some((c.name.clone(), v, tol.feasibility));
        }
    }
    let mut active = Vec::new();
    for (j, c) in p.inequalities.iter().enumerate() {
        let v = c.function.eval(x)?;
        residual = residual.max(v);
        if v.abs() <= tol.active {
            active.push(j);
        } else if v > 0.0 && worst.as_ref().is_none_or(|(_, w, _)| v > w.abs()) {
            worst = Some((c.name.clone(), v, tol.active.min(tol.feasibility)));
        }
    }
    if let Some((constraint, value, tol)) = worst {
        return Err(ModelError::Infeasible {
            constraint,
            value,
            tol,
        });
    }

    let objective = p.objective.eval_jet(x)?;
    let mut rows = Vec::new();
    for (i, c) in p.equalities.iter().enumerate() {
        rows.push(ConstraintRow {
            name: c.name.clone(),
            kind: RowKind::Equality(i),
            jet: c.function.eval_jet(x)?,
        });
    }
    for &j in &active {
        let c = &p.inequalities[j];
        rows.push(ConstraintRow {
            name: c.name.clone(),
            kind: RowKind::Inequality(j),
            jet: c.function.eval_jet(x)?,
        });
    }
    let grads: Vec<Vec<f64>> = rows.iter().map(|r| r.jet.gradient().to_vec()).collect();
    let jacobian = Matrix::from_rows(&grads, n);
    let jacobian_svd = linalg::svd(&jacobian, tol.rank_rel, tol.rank_abs)?;
    Ok(StationaryPointAnalysis {
        point: x.clone(),
        feasibility_residual: residual.max(0.0),
        active_set: active,
        objective,
        num_equalities: p.equalities.len(),
        rank: jacobian_svd.rank,
        critical_basis: jacobian_svd.nullspace(),
        left_kernel: jacobian_svd.left_nullspace(),
        jacobian,
        jacobian_svd,
        rows,
        tolerances: *tol,
    })
}
