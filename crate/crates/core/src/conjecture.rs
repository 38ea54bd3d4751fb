//! Certification of WSOC when the active Jacobian gains at most one rank
//! near `x*`: rank probing, the activating left singular direction, smooth
//! SVD oracle validation, and the two-endpoint multiplier construction.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix};
use crate::model::{HessianSet, ModelError, NlpProblem, StationaryPointAnalysis};
use crate::multipliers::{Extremum, MultiplierError, MultiplierPolytope};
use crate::secondorder::{self, SecondOrderError, YuanOutcome};

/// Step halvings used to extrapolate singular vectors toward `x*`.
const RAY_STEPS: usize = 4;
/// Largest pairwise angle (radians) between per-ray limits still called consistent.
pub const CONSISTENCY_TOL: f64 = 1e-3;
/// Cross-ray angle above which a singular subspace is flagged as direction dependent.
pub const CONTINUITY_FLAG: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConjectureError {
    #[error("Ker(J(x*)ᵀ) is trivial, so no singular value can activate")]
    NoKernel,
    #[error("no activating direction: sigma_{index} stays below the rank tolerance on every ray")]
    NoActivatingDirection { index: usize },
    #[error("the problem has no svd oracle")]
    NoOracle,
    #[error("rank is not constant near x* (base {base}, observed up to {max})")]
    NotConstantRank { base: usize, max: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Multipliers(#[from] MultiplierError),
    #[error(transparent)]
    SecondOrder(#[from] SecondOrderError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn unit_gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = linalg::norm(&v);
        if nv > 1e-12 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

fn offset(x: &[f64], s: f64, w: &[f64]) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a + s * b).collect()
}

/// Flips `v` so that its first coordinate with `|v_i| > 1e-12` is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankProbeReport {
    pub base_rank: usize,
    pub radius: f64,
    pub samples: usize,
    /// Observed numeric rank → number of samples.
    pub histogram: BTreeMap<usize, usize>,
    pub max_rank: usize,
    /// Samples skipped because an expression was undefined there.
    pub skipped: usize,
    /// Statistics of `σ_{r+1}` over the evaluated samples.
    pub sigma_next: Option<SigmaStats>,
}

impl RankProbeReport {
    pub fn constant_rank(&self) -> bool {
        self.max_rank == self.base_rank
    }

    /// The rank grows by more than one somewhere in the probe.
    pub fn exceeds_one_step(&self) -> bool {
        self.max_rank > self.base_rank + 1
    }
}

/// Numeric rank of `J(x)` (same rows as at `x*`) at points uniform in the
/// ball of the given radius around `x*`.
pub fn rank_probe(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<RankProbeReport, ConjectureError> {
    if radius.is_nan() || radius <= 0.0 || samples == 0 {
        return Err(ConjectureError::Precondition(
            "rank probe needs radius > 0 and at least one sample".into(),
        ));
    }
    let n = a.dim();
    let tol = &a.tolerances;
    let mut histogram = BTreeMap::new();
    let mut skipped = 0;
    let mut sigmas = Vec::new();
    for i in 0..samples {
        let mut rng = crate::sample_rng(seed, i as u64);
        let w = unit_gaussian(&mut rng, n);
        let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        let x = offset(&a.point, r, &w);
        let Ok(j) = p.jacobian_at(&a.active_set, &x) else {
            skipped += 1;
            continue;
        };
        let s = linalg::svd(&j, tol.rank_rel, tol.rank_abs)?;
        *histogram.entry(s.rank).or_insert(0) += 1;
        sigmas.push(s.singular_values.get(a.rank).copied().unwrap_or(0.0));
    }
    sigmas.sort_by(f64::total_cmp);
    let sigma_next = (!sigmas.is_empty()).then(|| SigmaStats {
        min: sigmas[0],
        median: sigmas[sigmas.len() / 2],
        max: sigmas[sigmas.len() - 1],
    });
    Ok(RankProbeReport {
        base_rank: a.rank,
        radius,
        samples,
        max_rank: histogram.keys().copied().max().unwrap_or(a.rank).max(a.rank),
        histogram,
        skipped,
        sigma_next,
    })
}

/// Richardson extrapolation to `s → 0` of vectors sampled at `s, s/2, s/4, …`
/// (first entry at the largest step).
fn richardson(samples: &[Vec<f64>]) -> Vec<f64> {
    let mut table: Vec<Vec<f64>> = samples.to_vec();
    for j in 1..samples.len() {
        let f = 2f64.powi(j as i32);
        table = table
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (f * b - a) / (f - 1.0)).collect())
            .collect();
    }
    table.pop().unwrap_or_default()
}

/// Left and right singular vectors along a ray, one per dyadic step.
type RaySamples = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Singular vectors of index `k` at `x* + s w` for the dyadic steps, with
/// signs aligned between consecutive steps. `None` if `σ_k` is not above the
/// rank tolerance at every step or an expression is undefined.
fn ray_vectors(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    w: &[f64],
    k: usize,
) -> Result<Option<RaySamples>, LinalgError> {
    let tol = &a.tolerances;
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    for step in 0..RAY_STEPS {
        let s = radius / 2f64.powi(step as i32);
        let Ok(j) = p.jacobian_at(&a.active_set, &offset(&a.point, s, w)) else {
            return Ok(None);
        };
        let svd = linalg::svd(&j, tol.rank_rel, tol.rank_abs)?;
        if svd.rank <= k {
            return Ok(None);
        }
        let mut u = svd.u.column(k);
        let mut v = svd.v.column(k);
        if let Some(prev) = us.last() {
            if linalg::dot(prev, &u) < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        if let Some(prev) = vs.last() {
            if linalg::dot(prev, &v) < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        us.push(u);
        vs.push(v);
    }
    Ok(Some((us, vs)))
}

fn project(basis: &Matrix, v: &[f64]) -> Vec<f64> {
    basis.matvec(&basis.tr_matvec(v))
}

fn max_pairwise_angle(vs: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let mut worst: f64 = 0.0;
    let table: Vec<Vec<f64>> = vs
        .iter()
        .map(|a| vs.iter().map(|b| linalg::line_angle(a, b)).collect())
        .collect();
    for row in &table {
        for &v in row {
            worst = worst.max(v);
        }
    }
    (worst, table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionSource {
    /// Column `r+1` of the oracle's `U(x*)`.
    Oracle,
    /// Extrapolated left singular vectors along random rays.
    Numeric,
    /// `Ker(J(x*)ᵀ)` is one-dimensional.
    Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivatingDirection {
    pub direction: Vec<f64>,
    pub source: DirectionSource,
    /// Per-ray extrapolated limits (projected on `Ker(J(x*)ᵀ)`).
    pub ray_limits: Vec<Vec<f64>>,
    pub alignment: Vec<Vec<f64>>,
    pub max_angle: f64,
    pub degenerate_rays: usize,
    pub consistent: bool,
    /// Angle between the oracle direction and the numeric estimate.
    pub cross_check_angle: Option<f64>,
}

fn numeric_direction(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    rays: usize,
    seed: u64,
) -> Result<ActivatingDirection, ConjectureError> {
    let kernel = &a.left_kernel;
    let mut limits: Vec<Vec<f64>> = Vec::new();
    let mut degenerate = 0;
    for i in 0..rays {
        let mut rng = crate::sample_rng(seed, i as u64);
        let w = unit_gaussian(&mut rng, a.dim());
        let Some((us, _)) = ray_vectors(p, a, radius, &w, a.rank)? else {
            degenerate += 1;
            continue;
        };
        let projected: Vec<Vec<f64>> = us.iter().map(|u| project(kernel, u)).collect();
        if projected.iter().any(|u| linalg::norm(u) < 1e-8) {
            degenerate += 1;
            continue;
        }
        let mut lim = linalg::normalized(&richardson(&projected));
        if let Some(first) = limits.first() {
            if linalg::dot(first, &lim) < 0.0 {
                lim.iter_mut().for_each(|x| *x = -*x);
            }
        }
        limits.push(lim);
    }
    if limits.is_empty() {
        return Err(ConjectureError::NoActivatingDirection { index: a.rank + 1 });
    }
    let mut mean = vec![0.0; kernel.rows()];
    for l in &limits {
        for (m, v) in mean.iter_mut().zip(l) {
            *m += v;
        }
    }
    let mut direction = linalg::normalized(&project(kernel, &mean));
    canonical_sign(&mut direction);
    let (max_angle, alignment) = max_pairwise_angle(&limits);
    Ok(ActivatingDirection {
        direction,
        source: DirectionSource::Numeric,
        ray_limits: limits,
        alignment,
        max_angle,
        degenerate_rays: degenerate,
        consistent: max_angle <= CONSISTENCY_TOL,
        cross_check_angle: None,
    })
}

/// The unit vector `û ∈ Ker(J(x*)ᵀ)` along which the `(r+1)`-th singular
/// value activates, with the sign fixed by [`canonical_sign`].
pub fn activating_direction(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    rays: usize,
    seed: u64,
) -> Result<ActivatingDirection, ConjectureError> {
    let kernel = &a.left_kernel;
    if kernel.cols() == 0 {
        return Err(ConjectureError::NoKernel);
    }
    if kernel.cols() == 1 {
        let mut direction = kernel.column(0);
        canonical_sign(&mut direction);
        return Ok(ActivatingDirection {
            direction,
            source: DirectionSource::Kernel,
            ray_limits: Vec::new(),
            alignment: Vec::new(),
            max_angle: 0.0,
            degenerate_rays: 0,
            consistent: true,
            cross_check_angle: None,
        });
    }
    if let Some(oracle) = &p.oracle {
        let f = oracle.evaluate(&a.point, a.num_rows(), a.dim())?;
        let col = f.u.column(a.rank);
        let proj = project(kernel, &col);
        if linalg::norm(&proj) > 1e-12 {
            let mut direction = linalg::normalized(&proj);
            canonical_sign(&mut direction);
            let numeric = numeric_direction(p, a, radius, rays, seed).ok();
            return Ok(ActivatingDirection {
                cross_check_angle: numeric.as_ref().map(|n| linalg::line_angle(&n.direction, &direction)),
                direction,
                source: DirectionSource::Oracle,
                ray_limits: numeric.as_ref().map(|n| n.ray_limits.clone()).unwrap_or_default(),
                alignment: numeric.as_ref().map(|n| n.alignment.clone()).unwrap_or_default(),
                max_angle: numeric.as_ref().map_or(0.0, |n| n.max_angle),
                degenerate_rays: numeric.as_ref().map_or(0, |n| n.degenerate_rays),
                consistent: numeric.as_ref().is_none_or(|n| n.consistent),
            });
        }
    }
    numeric_direction(p, a, radius, rays, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation measure observed by this check.
    pub worst: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleValidation {
    pub checks: Vec<OracleCheck>,
    pub points: usize,
    pub skipped: usize,
}

impl OracleValidation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const RECONSTRUCTION_TOL: f64 = 1e-9;
const ORTHOGONALITY_TOL: f64 = 1e-9;
const FD_RATIO_TOL: f64 = 0.1;

fn central_gradient(f: &crate::expr::ScalarFunction, x: &[f64], h: f64) -> Option<Vec<f64>> {
    one_sided(f, x, h, 0)
}

/// `mode`: 0 central, 1 forward, -1 backward.
fn one_sided(f: &crate::expr::ScalarFunction, x: &[f64], h: f64, mode: i32) -> Option<Vec<f64>> {
    let mut g = Vec::with_capacity(x.len());
    let f0 = if mode != 0 { f.eval(x).ok()? } else { 0.0 };
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        g.push(match mode {
            0 => (f.eval(&xp).ok()? - f.eval(&xm).ok()?) / (2.0 * h),
            1 => (f.eval(&xp).ok()? - f0) / h,
            _ => (f0 - f.eval(&xm).ok()?) / h,
        });
    }
    Some(g)
}

fn vec_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Validates a user-supplied smooth SVD of the active Jacobian. Orthogonality
/// is required only at `x*`; normalization, ordering and signs of the
/// singular values are not checked anywhere.
pub fn svd_oracle_validate(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    samples: usize,
    fd_step: f64,
    seed: u64,
) -> Result<OracleValidation, ConjectureError> {
    let oracle = p.oracle.as_ref().ok_or(ConjectureError::NoOracle)?;
    let (rows, n) = (a.num_rows(), a.dim());
    oracle.check_shape(rows, n)?;
    let tol = &a.tolerances;

    let mut points = vec![a.point.clone()];
    for i in 0..samples {
        let mut rng = crate::sample_rng(seed, i as u64);
        let w = unit_gaussian(&mut rng, n);
        let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        points.push(offset(&a.point, r, &w));
    }

    let mut recon = OracleCheck {
        name: "reconstruction",
        passed: true,
        worst: 0.0,
        failures: Vec::new(),
    };
    let mut trailing = OracleCheck {
        name: "trailing-singular-values",
        passed: true,
        worst: 0.0,
        failures: Vec::new(),
    };
    let mut skipped = 0;
    let mut evaluated = 0;
    for (idx, x) in points.iter().enumerate() {
        let (Ok(j), Ok(f)) = (p.jacobian_at(&a.active_set, x), oracle.evaluate(x, rows, n)) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        let diff = f.product().sub(&j);
        let err = diff.max_abs();
        recon.worst = recon.worst.max(err);
        if err > RECONSTRUCTION_TOL {
            recon.passed = false;
            let (mut wi, mut wj) = (0, 0);
            for r in 0..diff.rows() {
                for c in 0..diff.cols() {
                    if diff[(r, c)].abs() == err {
                        (wi, wj) = (r, c);
                    }
                }
            }
            recon.failures.push(format!(
                "point {idx}: |UΣVᵀ - J| = {err:.3e} at entry ({}, {})",
                wi + 1,
                wj + 1
            ));
        }
        let svd = linalg::svd(&j, tol.rank_rel, tol.rank_abs)?;
        let top = svd.singular_values.first().copied().unwrap_or(0.0);
        let limit = (tol.rank_rel * top).max(tol.rank_abs) + RECONSTRUCTION_TOL;
        for (k, s) in f.sigma.iter().enumerate().skip(svd.rank) {
            trailing.worst = trailing.worst.max(s.abs());
            if s.abs() > limit {
                trailing.passed = false;
                trailing.failures.push(format!(
                    "point {idx}: sigma[{}] = {s:.3e} but rank(J) = {}",
                    k + 1,
                    svd.rank
                ));
            }
        }
    }

    let mut ortho = OracleCheck {
        name: "orthogonality-at-point",
        passed: true,
        worst: 0.0,
        failures: Vec::new(),
    };
    let f = oracle.evaluate(&a.point, rows, n)?;
    for (label, m) in [("U", &f.u), ("V", &f.v)] {
        for i in 0..m.cols() {
            let ci = m.column(i);
            if linalg::norm(&ci) <= 1e-12 {
                ortho.passed = false;
                ortho.failures.push(format!("{label} column {} is zero", i + 1));
            }
            for k in i + 1..m.cols() {
                let ip = linalg::dot(&ci, &m.column(k)).abs();
                ortho.worst = ortho.worst.max(ip);
                if ip > ORTHOGONALITY_TOL {
                    ortho.passed = false;
                    ortho.failures.push(format!(
                        "{label} columns {} and {}: inner product {ip:.3e}",
                        i + 1,
                        k + 1
                    ));
                }
            }
        }
    }

    let mut smooth = OracleCheck {
        name: "differentiability",
        passed: true,
        worst: 0.0,
        failures: Vec::new(),
    };
    for (label, func) in oracle.entries() {
        let x = &a.point;
        let grads = (
            central_gradient(func, x, fd_step),
            central_gradient(func, x, fd_step / 2.0),
            one_sided(func, x, fd_step, 1),
            one_sided(func, x, fd_step, -1),
        );
        let (Some(g1), Some(g2), Some(gf), Some(gb)) = grads else {
            smooth.passed = false;
            smooth.failures.push(format!("{label}: undefined near x*"));
            continue;
        };
        let scale = 1e-4 + FD_RATIO_TOL * linalg::norm(&g2);
        let halving = vec_dist(&g1, &g2);
        let sided = vec_dist(&gf, &gb);
        smooth.worst = smooth.worst.max((halving.max(sided) - 1e-4) / scale.max(1e-300));
        if halving > scale {
            smooth.passed = false;
            smooth
                .failures
                .push(format!("{label}: gradient changes by {halving:.3e} under step halving"));
        }
        if sided > scale {
            smooth.passed = false;
            smooth.failures.push(format!(
                "{label}: forward and backward differences disagree by {sided:.3e}"
            ));
        }
    }
    smooth.worst = smooth.worst.max(0.0);

    Ok(OracleValidation {
        checks: vec![recon, trailing, ortho, smooth],
        points: evaluated,
        skipped,
    })
}

fn random_convex(vertices: &[Vec<f64>], rng: &mut impl Rng) -> Vec<f64> {
    let weights: Vec<f64> = (0..vertices.len())
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut nu = vec![0.0; vertices[0].len()];
    for (w, v) in weights.iter().zip(vertices) {
        for (x, y) in nu.iter_mut().zip(v) {
            *x += w / total * y;
        }
    }
    nu
}

fn max_form_difference(forms: &HessianSet, a: &[f64], b: &[f64]) -> f64 {
    forms.at(a).sub(&forms.at(b)).max_abs()
}

#[derive(Debug, Clone, PartialEq)]
pub enum OneParameterOutcome {
    /// `Ker(J(x*)ᵀ)` is one-dimensional or `Λ` is a single point, so equal
    /// `τ` forces equal multipliers.
    Vacuous,
    Checked { max_deviation: f64, pairs: usize },
}

/// Checks that the restricted form depends on the multiplier only through
/// `τ(ν) = ûᵀν`: pairs of multipliers on a common level set of `τ`.
pub fn one_parameter_check(
    p: &MultiplierPolytope,
    forms: &HessianSet,
    kernel: &Matrix,
    direction: &[f64],
    trials: usize,
    seed: u64,
) -> Result<OneParameterOutcome, ConjectureError> {
    if kernel.cols() <= 1 {
        return Ok(OneParameterOutcome::Vacuous);
    }
    let vertices = p.vertices()?;
    match vertices.len() {
        0 => return Err(ConjectureError::Precondition("the multiplier set is empty".into())),
        // A single multiplier: nothing to compare.
        1 => return Ok(OneParameterOutcome::Vacuous),
        _ => {}
    }
    let m = p.num_equalities();
    // Kernel directions orthogonal to û.
    let coords = kernel.tr_matvec(direction);
    let mut complement = Vec::new();
    for (j, &along) in coords.iter().enumerate() {
        let mut c = kernel.column(j);
        for (ci, di) in c.iter_mut().zip(direction) {
            *ci -= along * di;
        }
        complement.push(c);
    }
    let comp = linalg::orthonormal_span(&Matrix::from_columns(&complement, kernel.rows()), 1e-10, 1e-12)?;
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..trials {
        let mut rng = crate::sample_rng(seed, i as u64);
        let nu = random_convex(&vertices, &mut rng);
        let coeff: Vec<f64> = (0..comp.cols()).map(|_| rng.sample(StandardNormal)).collect();
        let w = comp.matvec(&coeff);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in m..nu.len() {
            if w[k] > 1e-14 {
                lo = lo.max(-nu[k] / w[k]);
            } else if w[k] < -1e-14 {
                hi = hi.min(-nu[k] / w[k]);
            }
        }
        if !lo.is_finite() || !hi.is_finite() || hi - lo <= 1e-12 {
            continue;
        }
        let t = lo + (hi - lo) * rng.gen::<f64>();
        let other: Vec<f64> = nu.iter().zip(&w).map(|(x, y)| x + t * y).collect();
        worst = worst.max(max_form_difference(forms, &nu, &other));
        pairs += 1;
    }
    Ok(OneParameterOutcome::Checked {
        max_deviation: worst,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateVerdict {
    Certified,
    HypothesisRefuted,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureCertificate {
    pub base_multiplier: Vec<f64>,
    pub direction: Vec<f64>,
    pub a_star: f64,
    pub b_star: f64,
    pub nu_a: Vec<f64>,
    pub nu_b: Vec<f64>,
    pub p_form: Matrix,
    pub q_form: Matrix,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub multiplier: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
    /// Direction (ambient coordinates) on which both endpoint forms are negative.
    pub witness: Option<Vec<f64>>,
    pub verdict: CertificateVerdict,
    /// The rank probe saw the rank grow by more than one.
    pub hypothesis_violated: bool,
}

impl ConjectureCertificate {
    /// `τ(ν) = ûᵀ(ν - μ̄)`
    pub fn tau(&self, nu: &[f64]) -> f64 {
        self.direction
            .iter()
            .zip(nu.iter().zip(&self.base_multiplier))
            .map(|(u, (x, b))| u * (x - b))
            .sum()
    }
}

/// Builds `μ̂ = αν_a + βν_b` from the endpoints of `τ` over `Λ` and verifies
/// WSOC for it. The sign of `û` is canonicalized first, so flipping it does
/// not change the result.
pub fn conjecture_certificate(
    a: &StationaryPointAnalysis,
    p: &MultiplierPolytope,
    direction: &[f64],
    probe: Option<&RankProbeReport>,
) -> Result<ConjectureCertificate, ConjectureError> {
    if p.is_empty() {
        return Err(ConjectureError::Precondition("the multiplier set is empty".into()));
    }
    if !p.is_bounded() {
        return Err(ConjectureError::Precondition(
            "the multiplier set is unbounded (MFCQ fails)".into(),
        ));
    }
    if direction.len() != p.dim() {
        return Err(ConjectureError::Precondition(format!(
            "direction has {} coordinates, multipliers have {}",
            direction.len(),
            p.dim()
        )));
    }
    let vertices = p.vertices()?;
    let base = vertices
        .first()
        .cloned()
        .ok_or_else(|| ConjectureError::Precondition("no vertex of the multiplier set".into()))?;
    let mut u = linalg::normalized(direction);
    canonical_sign(&mut u);
    let hypothesis_violated = probe.is_some_and(RankProbeReport::exceeds_one_step);
    let eps = a.tolerances.psd;
    let forms = a.hessians().restrict(&a.critical_basis);

    let tau0 = linalg::dot(&u, &base);
    let (lo, hi) = p.linear_bounds(&u);
    let (Extremum::Attained { value: lo, point: nu_a }, Extremum::Attained { value: hi, point: nu_b }) = (lo, hi)
    else {
        return Err(ConjectureError::Precondition("τ is unbounded on the multiplier set".into()));
    };
    let mut cert = ConjectureCertificate {
        base_multiplier: base,
        direction: u,
        a_star: lo - tau0,
        b_star: hi - tau0,
        p_form: forms.at(&nu_a),
        q_form: forms.at(&nu_b),
        nu_a,
        nu_b,
        alpha: None,
        beta: None,
        eta: None,
        multiplier: None,
        lambda_min: None,
        witness: None,
        verdict: CertificateVerdict::Inconclusive,
        hypothesis_violated,
    };
    if a.critical_dim() == 0 {
        cert.alpha = Some(1.0);
        cert.beta = Some(0.0);
        cert.eta = Some(cert.a_star);
        cert.multiplier = Some(cert.nu_a.clone());
        cert.verdict = CertificateVerdict::Certified;
        return Ok(cert);
    }
    match secondorder::yuan_combine(&cert.p_form, &cert.q_form, eps)? {
        YuanOutcome::Combined { alpha, beta, .. } => {
            let mu: Vec<f64> = cert
                .nu_a
                .iter()
                .zip(&cert.nu_b)
                .map(|(x, y)| alpha * x + beta * y)
                .collect();
            let m = forms.at(&mu);
            let lmin = linalg::min_eigenvalue(&m)?.unwrap_or(0.0);
            cert.alpha = Some(alpha);
            cert.beta = Some(beta);
            cert.eta = Some(alpha * cert.a_star + beta * cert.b_star);
            cert.lambda_min = Some(lmin);
            cert.multiplier = Some(mu);
            if lmin >= -eps * (1.0 + m.frobenius_norm()) {
                cert.verdict = CertificateVerdict::Certified;
            }
        }
        YuanOutcome::Refuted { witness } => {
            cert.witness = Some(a.critical_basis.matvec(&witness));
            cert.verdict = CertificateVerdict::HypothesisRefuted;
        }
        YuanOutcome::Inconclusive { best_lambda_min, .. } => {
            cert.lambda_min = Some(best_lambda_min);
        }
    }
    Ok(cert)
}

/// Largest change of the restricted form between random pairs of
/// multipliers, meaningful when the rank is constant near `x*`.
pub fn constant_rank_independence(
    p: &MultiplierPolytope,
    forms: &HessianSet,
    probe: &RankProbeReport,
    trials: usize,
    seed: u64,
) -> Result<f64, ConjectureError> {
    if !probe.constant_rank() {
        return Err(ConjectureError::NotConstantRank {
            base: probe.base_rank,
            max: probe.max_rank,
        });
    }
    let vertices = p.vertices()?;
    if vertices.is_empty() {
        return Err(ConjectureError::Precondition("the multiplier set is empty".into()));
    }
    let mut worst: f64 = 0.0;
    for (i, v) in vertices.iter().enumerate() {
        for w in &vertices[i + 1..] {
            worst = worst.max(max_form_difference(forms, v, w));
        }
    }
    for i in 0..trials {
        let mut rng = crate::sample_rng(seed, i as u64);
        let nu = random_convex(&vertices, &mut rng);
        let other = random_convex(&vertices, &mut rng);
        worst = worst.max(max_form_difference(forms, &nu, &other));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayLimit {
    pub ray: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub rays: Vec<RayLimit>,
    pub skipped: usize,
    pub left_max_angle: f64,
    pub right_max_angle: f64,
    pub left_flagged: bool,
    pub right_flagged: bool,
}

/// Per-ray limits of the `(r+1)`-th left and right singular vectors and the
/// largest angle between limits of different rays. Direction dependence of
/// a limit rules out a continuous SVD through `x*`.
pub fn svd_continuity_probe(
    p: &NlpProblem,
    a: &StationaryPointAnalysis,
    radius: f64,
    rays: usize,
    seed: u64,
) -> Result<ContinuityReport, ConjectureError> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for i in 0..rays {
        let mut rng = crate::sample_rng(seed, i as u64);
        let w = unit_gaussian(&mut rng, a.dim());
        match ray_vectors(p, a, radius, &w, a.rank)? {
            Some((us, vs)) => out.push(RayLimit {
                ray: w,
                left: linalg::normalized(&richardson(&us)),
                right: linalg::normalized(&richardson(&vs)),
            }),
            None => skipped += 1,
        }
    }
    let lefts: Vec<Vec<f64>> = out.iter().map(|r| r.left.clone()).collect();
    let rights: Vec<Vec<f64>> = out.iter().map(|r| r.right.clone()).collect();
    let (left_max_angle, _) = max_pairwise_angle(&lefts);
    let (right_max_angle, _) = max_pairwise_angle(&rights);
    Ok(ContinuityReport {
        rays: out,
        skipped,
        left_max_angle,
        right_max_angle,
        left_flagged: left_max_angle > CONTINUITY_FLAG,
        right_flagged: right_max_angle > CONTINUITY_FLAG,
    })
}
