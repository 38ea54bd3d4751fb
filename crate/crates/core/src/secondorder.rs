//! Constraint qualification and second-order checks at a candidate point:
//! MFCQ, critical cones, WSOC/SSOC for a given multiplier, direction-wise
//! necessary conditions, the two-form combiner and a global search for a
//! WSOC multiplier.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix};
use crate::model::{HessianSet, StationaryPointAnalysis};
use crate::multipliers::{
    Extremum, FritzJohnPolytope, GscsReport, LinearProgram, MultiplierError, MultiplierPolytope,
    Relation,
};

const GOLDEN_WIDTH: f64 = 1e-10;
const ALPHA_GRID: usize = 3600;
const ANGLE_GRID: usize = 3600;

#[derive(Debug, Error)]
pub enum SecondOrderError {
    #[error("the multiplier set is unbounded (MFCQ fails)")]
    Unbounded,
    #[error("the multiplier set is empty")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Multipliers(#[from] MultiplierError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn bottom_pair(m: &Matrix) -> Result<(f64, Vec<f64>), LinalgError> {
    let e = linalg::sym_eigen(m)?;
    Ok((e.values[0], e.vector(0)))
}

fn lambda_min(m: &Matrix) -> Result<f64, LinalgError> {
    Ok(linalg::min_eigenvalue(m)?.unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfcqReport {
    pub equality_independent: bool,
    /// Optimal `t*` of the direction LP.
    pub margin: f64,
    /// Direction achieving the margin, present when MFCQ holds.
    pub direction: Option<Vec<f64>>,
    pub holds: bool,
}

/// Decides MFCQ by the LP `max t` s.t. `∇h_iᵀd = 0`, `∇g_jᵀd + t <= 0`
/// (`j` active), `‖d‖_∞ <= 1`, `t <= 1`.
pub fn check_mfcq(a: &StationaryPointAnalysis) -> MfcqReport {
    let n = a.dim();
    let m = a.num_equalities;
    let eq = a.jacobian.select_rows(&(0..m).collect::<Vec<_>>());
    let rank = linalg::svd(&eq, a.tolerances.rank_rel, a.tolerances.rank_abs).map_or(0, |s| s.rank);
    let equality_independent = rank == m;

    let mut lp = LinearProgram::new(n + 1);
    lp.free.iter_mut().for_each(|f| *f = true);
    lp.objective[n] = 1.0;
    for (k, row) in a.rows.iter().enumerate() {
        let mut r = row.jet.gradient().to_vec();
        if k < m {
            r.push(0.0);
            lp.constrain(r, Relation::Eq, 0.0);
        } else {
            r.push(1.0);
            lp.constrain(r, Relation::Le, 0.0);
        }
    }
    for i in 0..n {
        let mut e = vec![0.0; n + 1];
        e[i] = 1.0;
        lp.constrain(e.clone(), Relation::Le, 1.0);
        lp.constrain(e, Relation::Ge, -1.0);
    }
    let mut e = vec![0.0; n + 1];
    e[n] = 1.0;
    lp.constrain(e, Relation::Le, 1.0);
    let margin = lp.solve_max().value().unwrap_or(f64::NEG_INFINITY);
    let holds = equality_independent && margin > 1e-9;
    let direction = if holds {
        least_l1_direction(&lp, margin)
    } else {
        None
    };
    MfcqReport {
        equality_independent,
        margin,
        direction,
        holds,
    }
}

/// Among the directions reaching `margin` in the MFCQ program, one of least
/// ℓ₁ norm (so the reported direction does not depend on pivoting accidents).
fn least_l1_direction(base: &LinearProgram, margin: f64) -> Option<Vec<f64>> {
    let n = base.num_vars() - 1;
    let width = 2 * n + 1;
    let widen = |row: &[f64]| {
        let mut r = row.to_vec();
        r.resize(width, 0.0);
        r
    };
    let mut lp = LinearProgram::new(width);
    for j in 0..=n {
        lp.free[j] = true;
    }
    for (row, rel, rhs) in &base.constraints {
        lp.constrain(widen(row), *rel, *rhs);
    }
    let mut t = vec![0.0; width];
    t[n] = 1.0;
    lp.constrain(t, Relation::Eq, margin);
    for i in 0..n {
        // e_i >= |d_i|
        let mut up = vec![0.0; width];
        up[n + 1 + i] = 1.0;
        up[i] = -1.0;
        lp.constrain(up, Relation::Ge, 0.0);
        let mut down = vec![0.0; width];
        down[n + 1 + i] = 1.0;
        down[i] = 1.0;
        lp.constrain(down, Relation::Ge, 0.0);
        lp.objective[n + 1 + i] = 1.0;
    }
    lp.solve().point().map(|p| p[..n].to_vec())
}

/// A polyhedral cone `{d : E d = 0, G d <= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    pub equality_labels: Vec<String>,
    pub equalities: Matrix,
    pub inequality_labels: Vec<String>,
    pub inequalities: Matrix,
}

impl PolyhedralCone {
    pub fn contains(&self, d: &[f64], tol: f64) -> bool {
        self.equalities.matvec(d).iter().all(|v| v.abs() <= tol)
            && self.inequalities.matvec(d).iter().all(|&v| v <= tol)
    }
}

/// The critical cone from its definition: `∇fᵀd = 0`, `∇h_iᵀd = 0`,
/// `∇g_jᵀd <= 0` for active `j`.
pub fn critical_cone(a: &StationaryPointAnalysis) -> PolyhedralCone {
    let n = a.dim();
    let m = a.num_equalities;
    let mut eq_labels = vec!["objective".to_string()];
    let mut eq_rows = vec![a.grad_objective().to_vec()];
    let mut in_labels = Vec::new();
    let mut in_rows = Vec::new();
    for (k, row) in a.rows.iter().enumerate() {
        if k < m {
            eq_labels.push(row.name.clone());
            eq_rows.push(row.jet.gradient().to_vec());
        } else {
            in_labels.push(row.name.clone());
            in_rows.push(row.jet.gradient().to_vec());
        }
    }
    PolyhedralCone {
        equality_labels: eq_labels,
        equalities: Matrix::from_rows(&eq_rows, n),
        inequality_labels: in_labels,
        inequalities: Matrix::from_rows(&in_rows, n),
    }
}

/// The critical cone written through a multiplier `ν ∈ Λ`: inequalities with
/// `μ_j > zero_tol` become equalities.
pub fn critical_cone_with_multiplier(a: &StationaryPointAnalysis, nu: &[f64], zero_tol: f64) -> PolyhedralCone {
    let n = a.dim();
    let m = a.num_equalities;
    let mut eq_labels = Vec::new();
    let mut eq_rows = Vec::new();
    let mut in_labels = Vec::new();
    let mut in_rows = Vec::new();
    for (k, row) in a.rows.iter().enumerate() {
        if k < m || nu[k] > zero_tol {
            eq_labels.push(row.name.clone());
            eq_rows.push(row.jet.gradient().to_vec());
        } else {
            in_labels.push(row.name.clone());
            in_rows.push(row.jet.gradient().to_vec());
        }
    }
    PolyhedralCone {
        equality_labels: eq_labels,
        equalities: Matrix::from_rows(&eq_rows, n),
        inequality_labels: in_labels,
        inequalities: Matrix::from_rows(&in_rows, n),
    }
}

/// `M = BᵀHB` for an orthonormal basis `B` of a subspace.
#[derive(Debug, Clone)]
pub struct RestrictedForm {
    pub basis: Matrix,
    pub matrix: Matrix,
    pub multiplier: Vec<f64>,
}

impl RestrictedForm {
    pub fn new(hessian: &Matrix, basis: &Matrix, multiplier: Vec<f64>) -> Self {
        RestrictedForm {
            basis: basis.clone(),
            matrix: hessian.congruence(basis),
            multiplier,
        }
    }

    pub fn of_multiplier(a: &StationaryPointAnalysis, nu: &[f64]) -> Self {
        let h = a.hessians().at(nu);
        Self::new(&h, &a.critical_basis, nu.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsdVerdict {
    /// `lambda_min` is `None` on a zero-dimensional subspace.
    Holds { lambda_min: Option<f64> },
    Fails { lambda_min: f64, witness: Vec<f64> },
}

impl PsdVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PsdVerdict::Holds { .. })
    }

    pub fn lambda_min(&self) -> Option<f64> {
        match self {
            PsdVerdict::Holds { lambda_min } => *lambda_min,
            PsdVerdict::Fails { lambda_min, .. } => Some(*lambda_min),
        }
    }
}

/// Positive semidefiniteness of the restricted form, up to
/// `λmin >= -eps_psd (1 + ‖M‖_F)`. The witness is in ambient coordinates.
pub fn wsoc_check(rf: &RestrictedForm, eps_psd: f64) -> Result<PsdVerdict, SecondOrderError> {
    if rf.dim() == 0 {
        return Ok(PsdVerdict::Holds { lambda_min: None });
    }
    let (lmin, v) = bottom_pair(&rf.matrix)?;
    if lmin >= -eps_psd * (1.0 + rf.matrix.frobenius_norm()) {
        Ok(PsdVerdict::Holds {
            lambda_min: Some(lmin),
        })
    } else {
        Ok(PsdVerdict::Fails {
            lambda_min: lmin,
            witness: rf.basis.matvec(&v),
        })
    }
}

/// `L ⊕ ray(d₀)`, with `d₀ ⊥ L` and `‖d₀‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderCone {
    pub lineality: Matrix,
    pub ray: Option<Vec<f64>>,
}

impl FirstOrderCone {
    pub fn subspace(basis: Matrix) -> Self {
        FirstOrderCone {
            lineality: basis,
            ray: None,
        }
    }

    /// Orthonormal basis of the span of the cone.
    pub fn span(&self) -> Matrix {
        let mut cols: Vec<Vec<f64>> = (0..self.lineality.cols()).map(|j| self.lineality.column(j)).collect();
        if let Some(r) = &self.ray {
            cols.push(r.clone());
        }
        Matrix::from_columns(&cols, self.lineality.rows())
    }
}

/// The critical cone as a first-order cone when generalized strict
/// complementarity holds; `None` otherwise.
pub fn first_order_cone_from_gscs(
    a: &StationaryPointAnalysis,
    gscs: &GscsReport,
) -> Result<Option<FirstOrderCone>, SecondOrderError> {
    match gscs.zero_set.as_slice() {
        [] => Ok(Some(FirstOrderCone::subspace(a.critical_basis.clone()))),
        [i] => {
            let row = a.num_equalities + i;
            let keep: Vec<usize> = (0..a.num_rows()).filter(|&k| k != row).collect();
            let tol = &a.tolerances;
            let s_prime = linalg::nullspace(&a.jacobian.select_rows(&keep), tol.rank_rel, tol.rank_abs)?;
            let g = a.rows[row].jet.gradient();
            let coords = s_prime.tr_matvec(g);
            let gp = s_prime.matvec(&coords);
            let norm = linalg::norm(&gp);
            if norm <= tol.rank_abs.max(tol.rank_rel * (1.0 + linalg::norm(g))) {
                return Ok(Some(FirstOrderCone::subspace(s_prime)));
            }
            let ray: Vec<f64> = gp.iter().map(|v| -v / norm).collect();
            Ok(Some(FirstOrderCone {
                lineality: a.critical_basis.clone(),
                ray: Some(ray),
            }))
        }
        _ => Ok(None),
    }
}

/// SSOC for one Hessian on a first-order cone. Quadratic forms are even and
/// every vector of the span has itself or its negative in the cone, so the
/// check is exact on the span.
pub fn ssoc_first_order_check(h: &Matrix, cone: &FirstOrderCone, eps_psd: f64) -> Result<PsdVerdict, SecondOrderError> {
    let rf = RestrictedForm::new(h, &cone.span(), Vec::new());
    wsoc_check(&rf, eps_psd)
}

/// Unit directions in `s`-dimensional coordinates: a single direction for
/// `s = 1`, `count` equally spaced angles for `s = 2`, a Fibonacci sphere for
/// `s = 3`, and the coordinate axes plus seeded random directions otherwise.
pub fn subspace_directions(s: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match s {
        0 => Vec::new(),
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..s {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; s];
                    e[i] = sign;
                    out.push(e);
                }
            }
            let mut k = 0u64;
            while out.len() < count {
                let mut rng = crate::sample_rng(seed, k);
                k += 1;
                let v: Vec<f64> = (0..s).map(|_| rng.sample(StandardNormal)).collect();
                let nv = linalg::norm(&v);
                if nv > 1e-12 {
                    out.push(v.iter().map(|x| x / nv).collect());
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSample {
    pub direction: Vec<f64>,
    /// `max { dᵀ∇²L(ν) d : ν ∈ Λ }`
    pub value: f64,
    pub multiplier: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionwiseReport {
    pub samples: Vec<DirectionSample>,
}

impl DirectionwiseReport {
    pub fn worst(&self) -> Option<&DirectionSample> {
        self.samples
            .iter()
            .reduce(|w, s| if s.value < w.value { s } else { w })
    }
}

/// For each direction (ambient coordinates), the best multiplier for that
/// direction alone. Sampling can falsify the direction-wise necessary
/// condition but never proves it.
pub fn directionwise_necessary(
    p: &MultiplierPolytope,
    hessians: &HessianSet,
    directions: &[Vec<f64>],
) -> Result<DirectionwiseReport, SecondOrderError> {
    if p.is_empty() {
        return Err(SecondOrderError::Empty);
    }
    if !p.is_bounded() {
        return Err(SecondOrderError::Unbounded);
    }
    let mut samples = Vec::with_capacity(directions.len());
    for d in directions {
        let (q0, q) = hessians.direction_functional(d);
        match p.maximize(&q) {
            Extremum::Attained { value, point } => samples.push(DirectionSample {
                direction: d.clone(),
                value: q0 + value,
                multiplier: point,
            }),
            Extremum::Unbounded => return Err(SecondOrderError::Unbounded),
            Extremum::Empty => return Err(SecondOrderError::Empty),
        }
    }
    Ok(DirectionwiseReport { samples })
}

/// `max { dᵀ∇²L^g(λ₀, ν) d }` over the normalized Fritz John set; the
/// optimal point is `(λ₀, ν)`.
pub fn fritz_john_directionwise(
    fj: &FritzJohnPolytope,
    hessians: &HessianSet,
    d: &[f64],
) -> Result<Extremum, SecondOrderError> {
    let (q0, q) = hessians.direction_functional(d);
    match fj.maximize(q0, &q) {
        Extremum::Empty => Err(SecondOrderError::Empty),
        other => Ok(other),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum YuanOutcome {
    Combined { alpha: f64, beta: f64, lambda_min: f64 },
    /// `max{dᵀPd, dᵀQd} < 0`: no convex combination can be PSD.
    Refuted { witness: Vec<f64> },
    Inconclusive { best_alpha: f64, best_lambda_min: f64 },
}

/// Golden-section maximization of a concave function on `[lo, hi]`,
/// biased to the left on ties.
fn golden_max(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_WIDTH {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Finds `α, β >= 0`, `α + β = 1` with `αP + βQ` PSD, or a direction on
/// which both forms are negative.
pub fn yuan_combine(p: &Matrix, q: &Matrix, eps_psd: f64) -> Result<YuanOutcome, SecondOrderError> {
    let s = p.rows();
    if p.cols() != s || q.rows() != s || q.cols() != s {
        return Err(SecondOrderError::Dimension(format!(
            "{}x{} and {}x{} forms",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if s == 0 {
        return Ok(YuanOutcome::Combined {
            alpha: 1.0,
            beta: 0.0,
            lambda_min: 0.0,
        });
    }
    let combo = |alpha: f64| {
        let mut m = q.scaled(1.0 - alpha);
        m.add_scaled(alpha, p);
        m
    };
    let mut failure = None;
    let mut phi = |alpha: f64| match lambda_min(&combo(alpha)) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            f64::NEG_INFINITY
        }
    };
    let (x, fx) = golden_max(&mut phi, 0.0, 1.0);
    let mut best = (0.0, phi(0.0));
    for (alpha, v) in [(x, fx), (1.0, phi(1.0))] {
        if v > best.1 {
            best = (alpha, v);
        }
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    let accept = |alpha: f64, v: f64| v >= -eps_psd * (1.0 + combo(alpha).frobenius_norm());
    if accept(best.0, best.1) {
        return Ok(YuanOutcome::Combined {
            alpha: best.0,
            beta: 1.0 - best.0,
            lambda_min: best.1,
        });
    }

    let scale = 1.0 + p.frobenius_norm().max(q.frobenius_norm());
    let refute_tol = eps_psd * scale;
    let refutes = |d: &[f64]| {
        let nd = linalg::norm(d);
        nd > 0.0 && {
            let d: Vec<f64> = d.iter().map(|v| v / nd).collect();
            p.quadratic_form(&d).max(q.quadratic_form(&d)) < -refute_tol
        }
    };

    // Bottom eigenspace at the maximizer: a vector there on which P and Q
    // agree has both forms equal to the (negative) optimum.
    let e = linalg::sym_eigen(&combo(best.0))?;
    let cluster_tol = 1e-7 * scale;
    let k = e.values.iter().take_while(|&&v| v <= e.values[0] + cluster_tol).count();
    let basis = e.vectors.select_columns(&(0..k).collect::<Vec<_>>());
    let diff = p.sub(q).congruence(&basis);
    let de = linalg::sym_eigen(&diff)?;
    let lo = de.vector(0);
    let hi = de.vector(k - 1);
    let mut candidates = vec![basis.matvec(&lo), basis.matvec(&hi)];
    let (a_lo, a_hi) = (de.values[0], de.values[k - 1]);
    if a_lo < 0.0 && a_hi > 0.0 {
        let theta = (-a_lo / a_hi).sqrt().atan();
        let mix: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| theta.cos() * l + theta.sin() * h)
            .collect();
        candidates.push(basis.matvec(&mix));
    }
    if let Some(d) = candidates.iter().find(|d| refutes(d)) {
        return Ok(YuanOutcome::Refuted {
            witness: linalg::normalized(d),
        });
    }

    // Plane of the bottom eigenvectors of P and Q.
    let (_, vp) = bottom_pair(p)?;
    let (_, vq) = bottom_pair(q)?;
    for i in 0..ANGLE_GRID {
        let t = std::f64::consts::PI * i as f64 / ANGLE_GRID as f64;
        let d: Vec<f64> = vp.iter().zip(&vq).map(|(a, b)| t.cos() * a + t.sin() * b).collect();
        if refutes(&d) {
            return Ok(YuanOutcome::Refuted {
                witness: linalg::normalized(&d),
            });
        }
    }
    for i in 0..=ALPHA_GRID {
        let alpha = i as f64 / ALPHA_GRID as f64;
        let v = lambda_min(&combo(alpha))?;
        if accept(alpha, v) {
            return Ok(YuanOutcome::Combined {
                alpha,
                beta: 1.0 - alpha,
                lambda_min: v,
            });
        }
        if v > best.1 {
            best = (alpha, v);
        }
    }
    Ok(YuanOutcome::Inconclusive {
        best_alpha: best.0,
        best_lambda_min: best.1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum WsocSearch {
    Found {
        multiplier: Vec<f64>,
        lambda_min: f64,
        iterations: usize,
    },
    NotFound {
        best_multiplier: Vec<f64>,
        best_lambda_min: f64,
        /// Upper bound on `max_ν λmin(M(ν))` from the last duality gap.
        upper_bound: f64,
        iterations: usize,
    },
}

impl WsocSearch {
    pub fn lambda_min(&self) -> f64 {
        match self {
            WsocSearch::Found { lambda_min, .. } => *lambda_min,
            WsocSearch::NotFound { best_lambda_min, .. } => *best_lambda_min,
        }
    }

    pub fn multiplier(&self) -> &[f64] {
        match self {
            WsocSearch::Found { multiplier, .. } => multiplier,
            WsocSearch::NotFound { best_multiplier, .. } => best_multiplier,
        }
    }
}

/// Maximizes the concave function `ν ↦ λmin(M(ν))` over `Λ` by conditional
/// gradient steps from the best vertex. `forms` must already be restricted
/// to the subspace of interest.
pub fn find_wsoc_multiplier(
    p: &MultiplierPolytope,
    forms: &HessianSet,
    max_iter: usize,
    eps_psd: f64,
) -> Result<WsocSearch, SecondOrderError> {
    if !p.is_bounded() {
        return Err(SecondOrderError::Unbounded);
    }
    let vertices = p.vertices()?;
    if vertices.is_empty() {
        return Err(SecondOrderError::Empty);
    }
    let eval = |nu: &[f64]| -> Result<(f64, Vec<f64>, f64), LinalgError> {
        let m = forms.at(nu);
        let (v, vec) = if m.rows() == 0 {
            (0.0, Vec::new())
        } else {
            bottom_pair(&m)?
        };
        Ok((v, vec, -eps_psd * (1.0 + m.frobenius_norm())))
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for v in &vertices {
        let (l, _, _) = eval(v)?;
        if best.as_ref().is_none_or(|(_, b)| l > *b) {
            best = Some((v.clone(), l));
        }
    }
    let (mut nu, _) = best.expect("nonempty vertex list");
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..=max_iter {
        iterations = iter;
        let (l, v, threshold) = eval(&nu)?;
        if l >= threshold {
            return Ok(WsocSearch::Found {
                multiplier: nu,
                lambda_min: l,
                iterations: iter,
            });
        }
        if iter == max_iter {
            break;
        }
        let (_, grad) = forms.direction_functional(&v);
        let target = match p.maximize(&grad) {
            Extremum::Attained { point, .. } => point,
            Extremum::Unbounded => return Err(SecondOrderError::Unbounded),
            Extremum::Empty => return Err(SecondOrderError::Empty),
        };
        let gap: f64 = grad.iter().zip(target.iter().zip(&nu)).map(|(g, (t, x))| g * (t - x)).sum();
        upper = upper.min(l + gap.max(0.0));
        if gap <= 1e-12 {
            break;
        }
        let step = |t: f64| -> Vec<f64> { nu.iter().zip(&target).map(|(x, y)| x + t * (y - x)).collect() };
        let mut phi = |t: f64| eval(&step(t)).map_or(f64::NEG_INFINITY, |r| r.0);
        let (t, ft) = golden_max(&mut phi, 0.0, 1.0);
        let f1 = phi(1.0);
        let t = if f1 > ft { 1.0 } else { t };
        if t <= 0.0 || phi(t) <= l {
            break;
        }
        nu = step(t);
    }
    let (l, _, _) = eval(&nu)?;
    Ok(WsocSearch::NotFound {
        best_multiplier: nu,
        best_lambda_min: l,
        upper_bound: upper.max(l),
        iterations,
    })
}
