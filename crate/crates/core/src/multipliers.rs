//! Dense two-phase simplex and the multiplier sets at a candidate point.
//!
//! Multiplier vectors are ordered `ν = (λ, μ)`: one free coordinate per
//! equality, then one nonnegative coordinate per active inequality, matching
//! the rows of the active Jacobian.

use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::model::StationaryPointAnalysis;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 100_000;

/// Largest `m + |A|` for which polytope vertices are enumerated.
pub const MAX_ENUMERATION_ROWS: usize = 12;

/// Multipliers whose largest `μ_i` is at most this are treated as forcing `μ_i = 0`.
pub const GSCS_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiplierError {
    #[error("the multiplier set is empty")]
    Empty,
    #[error("vertex enumeration needs m + |A| <= {max}, got {got}")]
    TooManyRows { max: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `minimize cᵀx` subject to `a_iᵀx (<=|=|>=) b_i`, with `x_j >= 0` unless
/// variable `j` is free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<(Vec<f64>, Relation, f64)>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            constraints: Vec::new(),
            free: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, row: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.num_vars(), "constraint arity");
        self.constraints.push((row, rel, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        lp_solve(self)
    }

    /// Maximizes instead of minimizing; the reported value is the maximum.
    pub fn solve_max(&self) -> LpOutcome {
        let mut neg = self.clone();
        neg.objective.iter_mut().for_each(|c| *c = -*c);
        match lp_solve(&neg) {
            LpOutcome::Optimal { value, point } => LpOutcome::Optimal {
                value: -value,
                point,
            },
            other => other,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's-rule simplex on `cost` over the columns in `0..allowed`.
    /// Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum::<f64>();
                reduced < -COST_TOL
            });
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = self.rhs[i] / row[c];
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
        true
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, v)| cost[b] * v)
            .sum()
    }
}

/// Two-phase dense simplex with Bland's rule.
pub fn lp_solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars();
    assert_eq!(lp.free.len(), n, "free-variable mask arity");

    // Structural columns: x_j or (x_j⁺, x_j⁻) for free variables.
    let mut columns: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        columns.push((j, 1.0));
        if lp.free[j] {
            columns.push((j, -1.0));
        }
    }
    let ns = columns.len();
    let m = lp.constraints.len();
    let num_slack = lp
        .constraints
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Eq)
        .count();

    if m == 0 {
        let c = &lp.objective;
        return if (0..n).any(|j| c[j] < 0.0 || (lp.free[j] && c[j] != 0.0)) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal {
                value: 0.0,
                point: vec![0.0; n],
            }
        };
    }

    let width = ns + num_slack + m;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = ns;
    for (i, (a, rel, b)) in lp.constraints.iter().enumerate() {
        let mut row = vec![0.0; width];
        for (k, &(j, s)) in columns.iter().enumerate() {
            row[k] = s * a[j];
        }
        let mut natural = None;
        match rel {
            Relation::Le => {
                row[slack] = 1.0;
                natural = Some(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        let mut b = *b;
        if b < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            b = -b;
            natural = None;
        }
        let art = ns + num_slack + i;
        row[art] = 1.0;
        basis.push(natural.unwrap_or(art));
        rows.push(row);
        rhs.push(b);
    }
    let mut t = Tableau { rows, rhs, basis };

    let real = ns + num_slack;
    let phase1: Vec<f64> = (0..width).map(|k| if k >= real { 1.0 } else { 0.0 }).collect();
    t.optimize(&phase1, width);
    let scale = 1.0 + t.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if t.objective(&phase1) > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= real {
            match (0..real).find(|&k| t.rows[i][k].abs() > PIVOT_TOL && !t.basis.contains(&k)) {
                Some(k) => t.pivot(i, k),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut cost = vec![0.0; width];
    for (k, &(j, s)) in columns.iter().enumerate() {
        cost[k] = s * lp.objective[j];
    }
    if !t.optimize(&cost, real) {
        return LpOutcome::Unbounded;
    }
    let mut point = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < ns {
            let (j, s) = columns[b];
            point[j] += s * t.rhs[r];
        }
    }
    let value = lp.objective.iter().zip(&point).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal { value, point }
}

fn rank(a: &Matrix, rel: f64, abs: f64) -> usize {
    linalg::svd(a, rel, abs).map_or(0, |s| s.rank)
}

/// Minimum or maximum of a linear functional over a multiplier set.
#[derive(Debug, Clone, PartialEq)]
pub enum Extremum {
    Attained { value: f64, point: Vec<f64> },
    Unbounded,
    Empty,
}

impl Extremum {
    fn from_lp(o: LpOutcome) -> Self {
        match o {
            LpOutcome::Optimal { value, point } => Extremum::Attained { value, point },
            LpOutcome::Unbounded => Extremum::Unbounded,
            LpOutcome::Infeasible => Extremum::Empty,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Extremum::Attained { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            Extremum::Attained { point, .. } => Some(point),
            _ => None,
        }
    }
}

/// `Λ(x*) = {ν = (λ, μ) : J(x*)ᵀ ν = -∇f(x*), μ >= 0}`.
#[derive(Debug, Clone)]
pub struct MultiplierPolytope {
    jacobian: Matrix,
    grad_f: Vec<f64>,
    num_equalities: usize,
    empty: bool,
    bounded: bool,
}

impl MultiplierPolytope {
    pub fn new(a: &StationaryPointAnalysis) -> Self {
        Self::from_parts(a.jacobian.clone(), a.grad_objective().to_vec(), a.num_equalities)
    }

    /// `jacobian` has the equality rows first.
    pub fn from_parts(jacobian: Matrix, grad_f: Vec<f64>, num_equalities: usize) -> Self {
        assert_eq!(jacobian.cols(), grad_f.len(), "gradient arity");
        assert!(num_equalities <= jacobian.rows());
        let mut p = MultiplierPolytope {
            jacobian,
            grad_f,
            num_equalities,
            empty: false,
            bounded: false,
        };
        p.empty = matches!(p.base_lp().solve(), LpOutcome::Infeasible);
        p.bounded = p.recession_is_trivial();
        p
    }

    pub fn dim(&self) -> usize {
        self.jacobian.rows()
    }

    pub fn num_equalities(&self) -> usize {
        self.num_equalities
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// True when the set has no nonzero recession direction.
    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// The LP with the defining constraints of `Λ` and a zero objective.
    pub fn base_lp(&self) -> LinearProgram {
        let k = self.dim();
        let mut lp = LinearProgram::new(k);
        for i in 0..self.num_equalities {
            lp.free[i] = true;
        }
        for c in 0..self.jacobian.cols() {
            lp.constrain(self.jacobian.column(c), Relation::Eq, -self.grad_f[c]);
        }
        lp
    }

    fn recession_is_trivial(&self) -> bool {
        let m = self.num_equalities;
        let eq = self.jacobian.select_rows(&(0..m).collect::<Vec<_>>());
        if rank(&eq, linalg::DEFAULT_RANK_REL_TOL, linalg::DEFAULT_RANK_ABS_TOL) < m {
            return false;
        }
        let k = self.dim();
        if k == m {
            return true;
        }
        let mut lp = LinearProgram::new(k);
        for i in 0..m {
            lp.free[i] = true;
        }
        for c in 0..self.jacobian.cols() {
            lp.constrain(self.jacobian.column(c), Relation::Eq, 0.0);
        }
        let sum: Vec<f64> = (0..k).map(|i| if i < m { 0.0 } else { 1.0 }).collect();
        lp.objective = sum.clone();
        lp.constrain(sum, Relation::Le, 1.0);
        matches!(lp.solve_max().value(), Some(v) if v <= 1e-9)
    }

    pub fn contains(&self, nu: &[f64], tol: f64) -> bool {
        if nu.len() != self.dim() {
            return false;
        }
        if nu[self.num_equalities..].iter().any(|&v| v < -tol) {
            return false;
        }
        let r = self.jacobian.tr_matvec(nu);
        r.iter()
            .zip(&self.grad_f)
            .all(|(a, g)| (a + g).abs() <= tol * (1.0 + g.abs()))
    }

    pub fn minimize(&self, c: &[f64]) -> Extremum {
        let mut lp = self.base_lp();
        lp.objective = c.to_vec();
        Extremum::from_lp(lp.solve())
    }

    pub fn maximize(&self, c: &[f64]) -> Extremum {
        let mut lp = self.base_lp();
        lp.objective = c.to_vec();
        Extremum::from_lp(lp.solve_max())
    }

    /// `(min, max)` of `cᵀν` over `Λ`.
    pub fn linear_bounds(&self, c: &[f64]) -> (Extremum, Extremum) {
        (self.minimize(c), self.maximize(c))
    }

    /// Some point of `Λ`.
    pub fn any_point(&self) -> Option<Vec<f64>> {
        self.base_lp().solve().point().map(<[f64]>::to_vec)
    }

    /// Vertices of `Λ`, deduplicated and sorted in descending lexicographic
    /// order. Empty when `Λ` is empty or has a nontrivial lineality space.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>, MultiplierError> {
        let k = self.dim();
        if k > MAX_ENUMERATION_ROWS {
            return Err(MultiplierError::TooManyRows {
                max: MAX_ENUMERATION_ROWS,
                got: k,
            });
        }
        if self.empty {
            return Ok(Vec::new());
        }
        let m = self.num_equalities;
        let ineq = k - m;
        let jt = self.jacobian.transpose();
        let rhs: Vec<f64> = self.grad_f.iter().map(|g| -g).collect();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut out: Vec<Vec<f64>> = Vec::new();
        for mask in 0u32..(1u32 << ineq) {
            // Bits set in `mask` mark μ coordinates fixed at zero.
            let support: Vec<usize> = (0..k)
                .filter(|&i| i < m || mask & (1 << (i - m)) == 0)
                .collect();
            let sub = jt.select_columns(&support);
            let Ok((sol, r)) = linalg::lstsq(
                &sub,
                &rhs,
                linalg::DEFAULT_RANK_REL_TOL,
                linalg::DEFAULT_RANK_ABS_TOL,
            ) else {
                continue;
            };
            if r < support.len() {
                continue;
            }
            let resid = sub
                .matvec(&sol)
                .iter()
                .zip(&rhs)
                .fold(0.0f64, |a, (x, b)| a.max((x - b).abs()));
            if resid > 1e-9 * scale {
                continue;
            }
            let mut nu = vec![0.0; k];
            for (&i, v) in support.iter().zip(&sol) {
                nu[i] = *v;
            }
            if nu[m..].iter().any(|&v| v < -1e-10 * scale) {
                continue;
            }
            for v in nu[m..].iter_mut() {
                if *v < 0.0 || v.abs() < 1e-14 {
                    *v = 0.0;
                }
            }
            if !out
                .iter()
                .any(|w| w.iter().zip(&nu).all(|(a, b)| (a - b).abs() <= 1e-9))
            {
                out.push(nu);
            }
        }
        out.sort_by(|a, b| {
            b.iter()
                .zip(a)
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(out)
    }
}

/// Fritz John multipliers `(λ₀, λ, μ)` with `λ₀ >= 0`, `μ >= 0`,
/// `λ₀∇f + Jᵀν = 0`, normalized by `λ₀ + Σμ = 1`.
#[derive(Debug, Clone)]
pub struct FritzJohnPolytope {
    jacobian: Matrix,
    grad_f: Vec<f64>,
    num_equalities: usize,
    /// Equality gradients are linearly dependent, so `λ` is unbounded along
    /// the dependency and the normalization does not bound the set.
    pub degenerate: bool,
}

impl FritzJohnPolytope {
    pub fn new(a: &StationaryPointAnalysis) -> Self {
        let m = a.num_equalities;
        let eq = a.jacobian.select_rows(&(0..m).collect::<Vec<_>>());
        let rank = rank(&eq, a.tolerances.rank_rel, a.tolerances.rank_abs);
        FritzJohnPolytope {
            jacobian: a.jacobian.clone(),
            grad_f: a.grad_objective().to_vec(),
            num_equalities: m,
            degenerate: rank < m,
        }
    }

    /// Variables `(λ₀, ν)`, length `1 + m + |A|`.
    pub fn base_lp(&self) -> LinearProgram {
        let k = self.jacobian.rows();
        let m = self.num_equalities;
        let mut lp = LinearProgram::new(k + 1);
        for i in 0..m {
            lp.free[1 + i] = true;
        }
        for c in 0..self.jacobian.cols() {
            let mut row = vec![self.grad_f[c]];
            row.extend(self.jacobian.column(c));
            lp.constrain(row, Relation::Eq, 0.0);
        }
        let norm: Vec<f64> = (0..=k).map(|i| if i == 0 || i > m { 1.0 } else { 0.0 }).collect();
        lp.constrain(norm, Relation::Eq, 1.0);
        lp
    }

    /// Smallest `λ₀` over the set; `None` when the set is empty.
    pub fn min_lambda0(&self) -> Option<f64> {
        let mut lp = self.base_lp();
        lp.objective[0] = 1.0;
        lp.solve().value()
    }

    /// `max λ₀ q₀ + Σ ν_k q_k`.
    pub fn maximize(&self, q0: f64, q: &[f64]) -> Extremum {
        let mut lp = self.base_lp();
        lp.objective[0] = q0;
        lp.objective[1..].copy_from_slice(q);
        Extremum::from_lp(lp.solve_max())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GscsReport {
    /// `max μ_i` over `Λ` per active inequality; `None` when unbounded.
    pub max_mu: Vec<Option<f64>>,
    /// Positions (within the active set) of inequalities whose multiplier
    /// vanishes on all of `Λ`.
    pub zero_set: Vec<usize>,
    pub holds: bool,
}

/// Generalized strict complementarity: at most one active inequality has a
/// multiplier that is zero on the whole multiplier set.
pub fn gscs_check(p: &MultiplierPolytope) -> Result<GscsReport, MultiplierError> {
    if p.is_empty() {
        return Err(MultiplierError::Empty);
    }
    let m = p.num_equalities();
    let mut max_mu = Vec::new();
    let mut zero_set = Vec::new();
    for i in m..p.dim() {
        let mut c = vec![0.0; p.dim()];
        c[i] = 1.0;
        let v = p.maximize(&c).value();
        if matches!(v, Some(v) if v <= GSCS_ZERO_TOL) {
            zero_set.push(i - m);
        }
        max_mu.push(v);
    }
    Ok(GscsReport {
        max_mu,
        holds: zero_set.len() <= 1,
        zero_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.constrain(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.constrain(vec![3.0, 1.0], Relation::Le, 6.0);
        let o = lp.solve_max();
        assert!((o.value().unwrap() - 2.8).abs() < 1e-12);
        let x = o.point().unwrap();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.constrain(vec![1.0], Relation::Le, -1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(2);
        lp.free[0] = true;
        lp.objective = vec![1.0, 0.0];
        lp.constrain(vec![0.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.constrain(vec![2.0, 2.0], Relation::Eq, 2.0);
        lp.constrain(vec![1.0, -1.0], Relation::Ge, -1.0);
        let o = lp.solve();
        assert!((o.value().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minchenko_polytope() {
        let j = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]], 2);
        let p = MultiplierPolytope::from_parts(j, vec![0.0, -1.0], 0);
        assert!(!p.is_empty() && p.is_bounded());
        let v = p.vertices().unwrap();
        assert_eq!(
            v,
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        let g = gscs_check(&p).unwrap();
        assert!(g.holds && g.zero_set.is_empty());
    }

    #[test]
    fn equality_lineality_is_unbounded() {
        let j = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]], 2);
        let p = MultiplierPolytope::from_parts(j, vec![-1.0, 0.0], 2);
        assert!(!p.is_empty());
        assert!(!p.is_bounded());
        assert!(p.vertices().unwrap().is_empty());
    }
}
