//! The `analyze` pipeline: every stage runs when its preconditions hold,
//! failures are recorded per stage, and the WSOC verdict is taken from the
//! first path that certifies it.

use serde::Serialize;
use serde_json::Value;
use socert_core::conjecture::{
    self, ActivatingDirection, CertificateVerdict, DirectionSource, OneParameterOutcome, RankProbeReport,
};
use socert_core::model::{analyze_point, ModelError, NlpProblem, StationaryPointAnalysis, Tolerances};
use socert_core::multipliers::{gscs_check, FritzJohnPolytope, MultiplierPolytope};
use socert_core::secondorder::{
    self, check_mfcq, directionwise_necessary, find_wsoc_multiplier, first_order_cone_from_gscs, wsoc_check,
    PsdVerdict, RestrictedForm, WsocSearch,
};

pub const ORACLE_SAMPLES: usize = 50;
pub const ORACLE_FD_STEP: f64 = 1e-4;
pub const PAIR_TRIALS: usize = 100;
pub const MAX_LISTED_VERTICES: usize = 20;
const MAX_LISTED_FAILURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tolerances: Tolerances,
    pub radius: f64,
    pub samples: usize,
    pub rays: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub directions: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tolerances: Tolerances::default(),
            radius: 1e-2,
            samples: 200,
            rays: 16,
            seed: 42,
            max_iter: 200,
            directions: 720,
        }
    }
}

/// Final WSOC outcome; each maps to one exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Certified,
    Refuted,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::Refuted => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingsBlock {
    pub tol_active: f64,
    pub tol_feasibility: f64,
    pub tol_rank_rel: f64,
    pub tol_rank_abs: f64,
    pub tol_psd: f64,
    pub radius: f64,
    pub samples: usize,
    pub rays: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub directions: usize,
    pub oracle_samples: usize,
    pub pair_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityBlock {
    pub residual: f64,
    pub active: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobianBlock {
    pub rows: Vec<String>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub critical_dim: usize,
    pub left_kernel_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MfcqBlock {
    pub holds: bool,
    pub equality_independent: bool,
    pub margin: Option<f64>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolytopeBlock {
    pub labels: Vec<String>,
    pub dimension: usize,
    pub empty: bool,
    pub bounded: bool,
    pub vertex_count: Option<usize>,
    pub vertices: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FritzJohnBlock {
    pub min_lambda0: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GscsBlock {
    pub holds: bool,
    pub max_mu: Vec<Option<f64>>,
    pub zero_set: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexWsoc {
    pub multiplier: Vec<f64>,
    pub lambda_min: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionwiseBlock {
    pub directions: usize,
    pub worst_value: f64,
    pub worst_direction: Vec<f64>,
    pub worst_multiplier: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankProbeBlock {
    pub base_rank: usize,
    pub max_rank: usize,
    pub radius: f64,
    pub samples: usize,
    pub skipped: usize,
    pub histogram: Vec<(usize, usize)>,
    pub sigma_next_min: Option<f64>,
    pub sigma_next_median: Option<f64>,
    pub sigma_next_max: Option<f64>,
}

impl From<&RankProbeReport> for RankProbeBlock {
    fn from(r: &RankProbeReport) -> Self {
        RankProbeBlock {
            base_rank: r.base_rank,
            max_rank: r.max_rank,
            radius: r.radius,
            samples: r.samples,
            skipped: r.skipped,
            histogram: r.histogram.iter().map(|(k, v)| (*k, *v)).collect(),
            sigma_next_min: r.sigma_next.map(|s| s.min),
            sigma_next_median: r.sigma_next.map(|s| s.median),
            sigma_next_max: r.sigma_next.map(|s| s.max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionBlock {
    pub direction: Vec<f64>,
    pub source: &'static str,
    pub consistent: bool,
    pub max_angle: f64,
    pub rays_used: usize,
    pub degenerate_rays: usize,
    pub cross_check_angle: Option<f64>,
}

impl From<&ActivatingDirection> for DirectionBlock {
    fn from(d: &ActivatingDirection) -> Self {
        DirectionBlock {
            direction: d.direction.clone(),
            source: match d.source {
                DirectionSource::Oracle => "oracle",
                DirectionSource::Numeric => "numeric",
                DirectionSource::Kernel => "kernel",
            },
            consistent: d.consistent,
            max_angle: d.max_angle,
            rays_used: d.ray_limits.len(),
            degenerate_rays: d.degenerate_rays,
            cross_check_angle: d.cross_check_angle,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckBlock {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub failure_count: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleBlock {
    pub passed: bool,
    pub points: usize,
    pub skipped: usize,
    pub checks: Vec<OracleCheckBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneParameterBlock {
    pub vacuous: bool,
    pub max_deviation: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateBlock {
    pub direction: Vec<f64>,
    pub base_multiplier: Vec<f64>,
    pub a_star: f64,
    pub b_star: f64,
    pub nu_a: Vec<f64>,
    pub nu_b: Vec<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub multiplier: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub verdict: &'static str,
    pub hypothesis_violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchBlock {
    pub found: bool,
    pub multiplier: Vec<f64>,
    pub lambda_min: f64,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
}

impl From<&WsocSearch> for SearchBlock {
    fn from(s: &WsocSearch) -> Self {
        match s {
            WsocSearch::Found {
                multiplier,
                lambda_min,
                iterations,
            } => SearchBlock {
                found: true,
                multiplier: multiplier.clone(),
                lambda_min: *lambda_min,
                upper_bound: None,
                iterations: *iterations,
            },
            WsocSearch::NotFound {
                best_multiplier,
                best_lambda_min,
                upper_bound,
                iterations,
            } => SearchBlock {
                found: false,
                multiplier: best_multiplier.clone(),
                lambda_min: *best_lambda_min,
                upper_bound: Some(*upper_bound),
                iterations: *iterations,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityBlock {
    pub rays: usize,
    pub skipped: usize,
    pub left_max_angle: f64,
    pub right_max_angle: f64,
    pub left_flagged: bool,
    pub right_flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SsocBlock {
    pub cone: &'static str,
    pub span_dim: usize,
    pub holds: bool,
    pub multiplier: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictBlock {
    pub wsoc: Outcome,
    /// Which stage decided the outcome.
    pub path: &'static str,
    pub multiplier: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub tool: ToolInfo,
    pub problem: String,
    pub variables: Vec<String>,
    pub point: Vec<f64>,
    pub settings: SettingsBlock,
    pub feasibility: FeasibilityBlock,
    pub jacobian: JacobianBlock,
    pub mfcq: MfcqBlock,
    pub multipliers: PolytopeBlock,
    pub fritz_john: FritzJohnBlock,
    pub gscs: Option<GscsBlock>,
    pub wsoc_vertices: Vec<VertexWsoc>,
    pub directionwise: Option<DirectionwiseBlock>,
    pub rank_probe: Option<RankProbeBlock>,
    pub constant_rank_deviation: Option<f64>,
    pub activating_direction: Option<DirectionBlock>,
    pub svd_continuity: Option<ContinuityBlock>,
    pub oracle_validation: Option<OracleBlock>,
    pub one_parameter: Option<OneParameterBlock>,
    pub certificate: Option<CertificateBlock>,
    pub wsoc_search: Option<SearchBlock>,
    pub ssoc: Option<SsocBlock>,
    pub verdict: VerdictBlock,
    pub errors: Vec<StageError>,
}

impl CertificateReport {
    pub fn outcome(&self) -> Outcome {
        self.verdict.wsoc
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        crate::canonical::to_canonical_string(&self.to_value())
    }

    pub fn to_text(&self) -> String {
        crate::canonical::to_text(&self.to_value())
    }
}

fn psd_holds(v: &PsdVerdict) -> (bool, Option<f64>) {
    (v.holds(), v.lambda_min())
}

struct Decision {
    outcome: Outcome,
    path: &'static str,
    multiplier: Option<Vec<f64>>,
    lambda_min: Option<f64>,
}

fn certified(path: &'static str, multiplier: Vec<f64>, lambda_min: Option<f64>) -> Decision {
    Decision {
        outcome: Outcome::Certified,
        path,
        multiplier: Some(multiplier),
        lambda_min,
    }
}

/// Runs every applicable stage on `p`. Only problems whose candidate point
/// cannot be analyzed at all (infeasible, undefined functions) are errors.
pub fn analyze(p: &NlpProblem, s: &Settings) -> Result<CertificateReport, ModelError> {
    let tol = s.tolerances;
    let a = analyze_point(p, &tol)?;
    let mut errors = Vec::new();
    let mut record = |stage: &'static str, e: &dyn std::fmt::Display| {
        errors.push(StageError {
            stage,
            message: e.to_string(),
        })
    };

    let mfcq = check_mfcq(&a);
    let poly = MultiplierPolytope::new(&a);
    let fj = FritzJohnPolytope::new(&a);
    let usable = !poly.is_empty() && poly.is_bounded();
    let vertices = match poly.vertices() {
        Ok(v) => Some(v),
        Err(e) => {
            record("vertices", &e);
            None
        }
    };

    let gscs = if usable {
        match gscs_check(&poly) {
            Ok(g) => Some(g),
            Err(e) => {
                record("gscs", &e);
                None
            }
        }
    } else {
        None
    };

    let eps = tol.psd;
    let mut wsoc_vertices = Vec::new();
    for v in vertices.iter().flatten() {
        let rf = RestrictedForm::of_multiplier(&a, v);
        match wsoc_check(&rf, eps) {
            Ok(verdict) => {
                let (holds, lambda_min) = psd_holds(&verdict);
                wsoc_vertices.push(VertexWsoc {
                    multiplier: v.clone(),
                    lambda_min,
                    holds,
                });
            }
            Err(e) => record("wsoc", &e),
        }
    }

    let hessians = a.hessians();
    let restricted = hessians.restrict(&a.critical_basis);
    let sdim = a.critical_dim();
    let mut directionwise = None;
    let mut single_direction = None;
    if usable && sdim > 0 {
        let dirs: Vec<Vec<f64>> = secondorder::subspace_directions(sdim, s.directions, s.seed)
            .iter()
            .map(|d| a.critical_basis.matvec(d))
            .collect();
        match directionwise_necessary(&poly, &hessians, &dirs) {
            Ok(r) => {
                let w = r.worst().expect("at least one direction");
                let threshold = tol.psd_threshold(&hessians.at(&w.multiplier));
                if sdim == 1 && w.value >= threshold {
                    single_direction = Some((w.multiplier.clone(), w.value));
                }
                directionwise = Some(DirectionwiseBlock {
                    directions: r.samples.len(),
                    worst_value: w.value,
                    worst_direction: w.direction.clone(),
                    worst_multiplier: w.multiplier.clone(),
                    holds: w.value >= threshold,
                });
            }
            Err(e) => record("directionwise", &e),
        }
    }

    let probe = if a.num_rows() > 0 {
        match conjecture::rank_probe(p, &a, s.radius, s.samples, s.seed) {
            Ok(r) => Some(r),
            Err(e) => {
                record("rank-probe", &e);
                None
            }
        }
    } else {
        None
    };

    let constant_rank_deviation = match &probe {
        Some(pr) if pr.constant_rank() && usable => {
            match conjecture::constant_rank_independence(&poly, &restricted, pr, PAIR_TRIALS, s.seed) {
                Ok(d) => Some(d),
                Err(e) => {
                    record("constant-rank", &e);
                    None
                }
            }
        }
        _ => None,
    };

    let direction = if usable && sdim > 0 && a.left_kernel.cols() > 0 {
        match conjecture::activating_direction(p, &a, s.radius, s.rays, s.seed) {
            Ok(d) => Some(d),
            Err(e) => {
                record("activating-direction", &e);
                None
            }
        }
    } else {
        None
    };

    let svd_continuity = match &probe {
        Some(pr) if pr.max_rank > pr.base_rank => {
            match conjecture::svd_continuity_probe(p, &a, s.radius, s.rays, s.seed) {
                Ok(c) => Some(ContinuityBlock {
                    rays: c.rays.len(),
                    skipped: c.skipped,
                    left_max_angle: c.left_max_angle,
                    right_max_angle: c.right_max_angle,
                    left_flagged: c.left_flagged,
                    right_flagged: c.right_flagged,
                }),
                Err(e) => {
                    record("svd-continuity", &e);
                    None
                }
            }
        }
        _ => None,
    };

    let oracle_validation = if p.oracle.is_some() {
        match conjecture::svd_oracle_validate(p, &a, s.radius, ORACLE_SAMPLES, ORACLE_FD_STEP, s.seed) {
            Ok(v) => Some(OracleBlock {
                passed: v.passed(),
                points: v.points,
                skipped: v.skipped,
                checks: v
                    .checks
                    .iter()
                    .map(|c| OracleCheckBlock {
                        name: c.name,
                        passed: c.passed,
                        worst: c.worst,
                        failure_count: c.failures.len(),
                        failures: c.failures.iter().take(MAX_LISTED_FAILURES).cloned().collect(),
                    })
                    .collect(),
            }),
            Err(e) => {
                record("oracle-validation", &e);
                None
            }
        }
    } else {
        None
    };

    let one_parameter = match &direction {
        Some(d) => {
            match conjecture::one_parameter_check(&poly, &restricted, &a.left_kernel, &d.direction, PAIR_TRIALS, s.seed) {
                Ok(OneParameterOutcome::Vacuous) => Some(OneParameterBlock {
                    vacuous: true,
                    max_deviation: None,
                    pairs: 0,
                }),
                Ok(OneParameterOutcome::Checked { max_deviation, pairs }) => Some(OneParameterBlock {
                    vacuous: false,
                    max_deviation: Some(max_deviation),
                    pairs,
                }),
                Err(e) => {
                    record("one-parameter", &e);
                    None
                }
            }
        }
        None => None,
    };

    let certificate = match &direction {
        Some(d) => match conjecture::conjecture_certificate(&a, &poly, &d.direction, probe.as_ref()) {
            Ok(c) => Some(c),
            Err(e) => {
                record("certificate", &e);
                None
            }
        },
        None => None,
    };
    let certificate_ok = certificate
        .as_ref()
        .is_some_and(|c| c.verdict == CertificateVerdict::Certified);

    let search = if usable && !certificate_ok && sdim > 0 {
        match find_wsoc_multiplier(&poly, &restricted, s.max_iter, eps) {
            Ok(r) => Some(r),
            Err(e) => {
                record("wsoc-search", &e);
                None
            }
        }
    } else {
        None
    };

    let ssoc = match (&gscs, usable) {
        (Some(g), true) if g.holds => match first_order_cone_from_gscs(&a, g) {
            Ok(Some(cone)) => ssoc_block(&a, &poly, &cone, s, &mut record),
            Ok(None) => None,
            Err(e) => {
                record("ssoc", &e);
                None
            }
        },
        _ => None,
    };

    // Decide.
    let decision = if poly.is_empty() {
        Decision {
            outcome: Outcome::Refuted,
            path: "no-lagrange-multiplier",
            multiplier: None,
            lambda_min: None,
        }
    } else if directionwise.as_ref().is_some_and(|d| !d.holds) {
        let d = directionwise.as_ref().unwrap();
        Decision {
            outcome: Outcome::Refuted,
            path: "directionwise",
            multiplier: Some(d.worst_multiplier.clone()),
            lambda_min: Some(d.worst_value),
        }
    } else if sdim == 0 {
        let nu = vertices
            .as_ref()
            .and_then(|v| v.first().cloned())
            .or_else(|| poly.any_point())
            .unwrap_or_default();
        certified("trivial-subspace", nu, None)
    } else if let Some((nu, value)) = single_direction {
        certified("single-direction", nu, Some(value))
    } else if let Some(c) = certificate.as_ref().filter(|_| certificate_ok) {
        certified("certificate", c.multiplier.clone().unwrap_or_default(), c.lambda_min)
    } else if let Some(v) = wsoc_vertices.iter().find(|v| v.holds) {
        certified("vertex", v.multiplier.clone(), v.lambda_min)
    } else {
        match &search {
            Some(WsocSearch::Found {
                multiplier, lambda_min, ..
            }) => certified("search", multiplier.clone(), Some(*lambda_min)),
            Some(WsocSearch::NotFound {
                best_multiplier,
                best_lambda_min,
                ..
            }) => Decision {
                outcome: Outcome::Refuted,
                path: "search",
                multiplier: Some(best_multiplier.clone()),
                lambda_min: Some(*best_lambda_min),
            },
            None => Decision {
                outcome: Outcome::Inconclusive,
                path: "none",
                multiplier: None,
                lambda_min: None,
            },
        }
    };

    let names = |idx: &[usize]| -> Vec<String> { idx.iter().map(|&j| p.inequalities[j].name.clone()).collect() };
    let gscs = gscs.map(|g| GscsBlock {
        holds: g.holds,
        max_mu: g.max_mu.clone(),
        zero_set: names(&g.zero_set.iter().map(|&i| a.active_set[i]).collect::<Vec<_>>()),
    });

    Ok(CertificateReport {
        tool: ToolInfo {
            name: "socert",
            version: env!("CARGO_PKG_VERSION"),
        },
        problem: p.name.clone(),
        variables: p.vars.clone(),
        point: a.point.clone(),
        settings: SettingsBlock {
            tol_active: tol.active,
            tol_feasibility: tol.feasibility,
            tol_rank_rel: tol.rank_rel,
            tol_rank_abs: tol.rank_abs,
            tol_psd: tol.psd,
            radius: s.radius,
            samples: s.samples,
            rays: s.rays,
            seed: s.seed,
            max_iter: s.max_iter,
            directions: s.directions,
            oracle_samples: ORACLE_SAMPLES,
            pair_trials: PAIR_TRIALS,
        },
        feasibility: FeasibilityBlock {
            residual: a.feasibility_residual,
            active: names(&a.active_set),
        },
        jacobian: JacobianBlock {
            rows: a.row_labels(),
            rank: a.rank,
            singular_values: a.jacobian_svd.singular_values.clone(),
            critical_dim: sdim,
            left_kernel_dim: a.left_kernel.cols(),
        },
        mfcq: MfcqBlock {
            holds: mfcq.holds,
            equality_independent: mfcq.equality_independent,
            margin: mfcq.margin.is_finite().then_some(mfcq.margin),
            direction: mfcq.direction,
        },
        multipliers: PolytopeBlock {
            labels: a.row_labels(),
            dimension: poly.dim(),
            empty: poly.is_empty(),
            bounded: poly.is_bounded(),
            vertex_count: vertices.as_ref().map(Vec::len),
            vertices: vertices.filter(|v| v.len() <= MAX_LISTED_VERTICES),
        },
        fritz_john: FritzJohnBlock {
            min_lambda0: fj.min_lambda0(),
            degenerate: fj.degenerate,
        },
        gscs,
        wsoc_vertices,
        directionwise,
        rank_probe: probe.as_ref().map(RankProbeBlock::from),
        constant_rank_deviation,
        activating_direction: direction.as_ref().map(DirectionBlock::from),
        svd_continuity,
        oracle_validation,
        one_parameter,
        certificate: certificate.map(|c| CertificateBlock {
            verdict: match c.verdict {
                CertificateVerdict::Certified => "certified",
                CertificateVerdict::HypothesisRefuted => "hypothesis-refuted",
                CertificateVerdict::Inconclusive => "inconclusive",
            },
            direction: c.direction,
            base_multiplier: c.base_multiplier,
            a_star: c.a_star,
            b_star: c.b_star,
            nu_a: c.nu_a,
            nu_b: c.nu_b,
            alpha: c.alpha,
            beta: c.beta,
            eta: c.eta,
            multiplier: c.multiplier,
            lambda_min: c.lambda_min,
            witness: c.witness,
            hypothesis_violated: c.hypothesis_violated,
        }),
        wsoc_search: search.as_ref().map(SearchBlock::from),
        ssoc,
        verdict: VerdictBlock {
            wsoc: decision.outcome,
            path: decision.path,
            multiplier: decision.multiplier,
            lambda_min: decision.lambda_min,
            exit_code: decision.outcome.exit_code(),
        },
        errors,
    })
}

/// SSOC on a first-order critical cone reduces to PSD on its span; when the
/// cone is the critical subspace itself this is WSOC again.
fn ssoc_block(
    a: &StationaryPointAnalysis,
    poly: &MultiplierPolytope,
    cone: &secondorder::FirstOrderCone,
    s: &Settings,
    record: &mut impl FnMut(&'static str, &dyn std::fmt::Display),
) -> Option<SsocBlock> {
    let span = cone.span();
    let forms = a.hessians().restrict(&span);
    let label = if cone.ray.is_some() { "subspace-plus-ray" } else { "subspace" };
    if span.cols() == 0 {
        return Some(SsocBlock {
            cone: label,
            span_dim: 0,
            holds: true,
            multiplier: poly.vertices().ok().and_then(|v| v.first().cloned()),
            lambda_min: None,
        });
    }
    match find_wsoc_multiplier(poly, &forms, s.max_iter, s.tolerances.psd) {
        Ok(r) => {
            let nu = r.multiplier().to_vec();
            match secondorder::ssoc_first_order_check(&a.hessians().at(&nu), cone, s.tolerances.psd) {
                Ok(v) => Some(SsocBlock {
                    cone: label,
                    span_dim: span.cols(),
                    holds: v.holds(),
                    multiplier: Some(nu),
                    lambda_min: v.lambda_min(),
                }),
                Err(e) => {
                    record("ssoc", &e);
                    None
                }
            }
        }
        Err(e) => {
            record("ssoc", &e);
            None
        }
    }
}
