//! Finite-difference audit of every function in a problem.

use rand::Rng;
use socert_core::expr::{fd_check, ScalarFunction};
use socert_core::model::NlpProblem;
use socert_core::sample_rng;

pub const NEARBY_POINTS: usize = 20;
pub const FD_STEP: f64 = 1e-5;
pub const FD_LIMIT: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub function: String,
    /// Worst deviation over all points, or the first evaluation error.
    pub result: Result<f64, String>,
}

impl DerivativeCheck {
    pub fn passed(&self) -> bool {
        matches!(self.result, Ok(v) if v <= FD_LIMIT)
    }
}

/// `x*` followed by points uniform in the ball of `radius` around it.
pub fn probe_points(p: &NlpProblem, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let n = p.dim();
    let mut out = vec![p.point.clone()];
    for k in 0..NEARBY_POINTS {
        let mut rng = sample_rng(seed, k as u64);
        loop {
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if d.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                out.push(p.point.iter().zip(&d).map(|(x, v)| x + radius * v).collect());
                break;
            }
        }
    }
    out
}

fn check(name: &str, f: &ScalarFunction, points: &[Vec<f64>]) -> DerivativeCheck {
    let mut worst: f64 = 0.0;
    for x in points {
        match fd_check(f, x, FD_STEP) {
            Ok(v) => worst = worst.max(v),
            Err(e) => {
                return DerivativeCheck {
                    function: name.to_string(),
                    result: Err(format!("at {x:?}: {e}")),
                }
            }
        }
    }
    DerivativeCheck {
        function: name.to_string(),
        result: Ok(worst),
    }
}

/// Objective first, then equalities and inequalities in file order.
pub fn check_derivatives(p: &NlpProblem, radius: f64, seed: u64) -> Vec<DerivativeCheck> {
    let points = probe_points(p, radius, seed);
    let mut out = vec![check("objective", &p.objective, &points)];
    for c in p.equalities.iter().chain(&p.inequalities) {
        out.push(check(&c.name, &c.function, &points));
    }
    out
}
