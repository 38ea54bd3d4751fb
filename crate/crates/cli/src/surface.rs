//! Grid dumps of one constraint over the first two variables.

use socert_core::expr::{BinaryOp, Expr, ScalarFunction};
use socert_core::model::NlpProblem;

use crate::canonical::format_float;
use crate::CliError;

fn mentions(e: &Expr, var: usize) -> bool {
    match e {
        Expr::Const(_) => false,
        Expr::Var(v) => *v == var,
        Expr::Unary(_, a) | Expr::Pow(a, _) => mentions(a, var),
        Expr::Binary(_, a, b) => mentions(a, var) || mentions(b, var),
    }
}

/// `q(x1, x2) - x3`, whose zero set is the graph of `q`.
fn is_height_form(f: &ScalarFunction) -> bool {
    f.arity() >= 3
        && matches!(f.root(), Expr::Binary(BinaryOp::Sub, q, rhs) if **rhs == Expr::Var(2) && !mentions(q, 2))
}

/// Grid coordinates: `n` evenly spaced points, or the midpoint when `n = 1`.
pub fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV with header `x1,x2,value` (actual variable names), `x1` in the outer
/// loop. Constraints of the form `q(x1, x2) - x3` report the height `q`;
/// others are evaluated with the remaining variables at `x*`.
pub fn surface_csv(p: &NlpProblem, constraint: &str, n: usize, lo: f64, hi: f64) -> Result<String, CliError> {
    if p.dim() < 2 {
        return Err(CliError::Usage(format!("problem `{}` has fewer than two variables", p.name)));
    }
    let c = p
        .constraint(constraint)
        .ok_or_else(|| CliError::Usage(format!("no constraint named `{constraint}`")))?;
    let f = &c.function;
    let height = is_height_form(f);
    let mut out = format!("{},{},value\n", p.vars[0], p.vars[1]);
    let axis = grid(n, lo, hi);
    for &x1 in &axis {
        for &x2 in &axis {
            let mut x = p.point.clone();
            x[0] = x1;
            x[1] = x2;
            if height {
                x[2] = 0.0;
            }
            let value = f.eval(&x)?;
            out.push_str(&format!("{},{},{}\n", format_float(x1), format_float(x2), format_float(value)));
        }
    }
    Ok(out)
}
