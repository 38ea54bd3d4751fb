use proptest::prelude::*;
use socert_core::expr::{fd_check, parse, BinaryOp, Expr, ScalarFunction, UnaryOp};

const NAMES: [&str; 3] = ["x1", "x2", "x3"];

fn names() -> Vec<String> {
    NAMES.iter().map(|s| s.to_string()).collect()
}

/// Trees built only from operations that are defined everywhere.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..4.0).prop_map(|c| Expr::Const((c * 8.0).round() / 8.0)),
        (0usize..3).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Neg, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Cos, Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b))),
            (inner, 0u32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k as f64)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_then_parse_is_identity(e in smooth_expr()) {
        let f = ScalarFunction::new(names(), e).unwrap();
        let g = parse(&f.to_string(), &NAMES).unwrap();
        prop_assert_eq!(f.root(), g.root());
    }

    #[test]
    fn jet_value_matches_eval(e in smooth_expr(), x in point()) {
        let f = ScalarFunction::new(names(), e).unwrap();
        let v = f.eval(&x).unwrap();
        let j = f.eval_jet(&x).unwrap();
        prop_assert!((v - j.value()).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn jet_derivatives_match_finite_differences(e in smooth_expr(), x in point()) {
        let f = ScalarFunction::new(names(), e).unwrap();
        let dev = fd_check(&f, &x, 1e-5).unwrap();
        let j = f.eval_jet(&x).unwrap();
        let scale = 1.0 + j.gradient().iter().fold(0.0f64, |m, g| m.max(g.abs()))
            + j.hessian_matrix().max_abs();
        prop_assert!(dev <= 1e-5 * scale, "deviation {} at {:?} for {}", dev, x, f);
    }

    #[test]
    fn hessian_is_symmetric(e in smooth_expr(), x in point()) {
        let h = ScalarFunction::new(names(), e).unwrap().eval_jet(&x).unwrap().hessian_matrix();
        prop_assert_eq!(h.clone(), h.transpose());
    }
}

#[test]
fn transcendental_functions_against_closed_forms() {
    let f = parse("exp(x1) * ln(x2) + sqrt(x3) / x1", &NAMES).unwrap();
    let x = [0.7, 2.5, 1.3];
    let j = f.eval_jet(&x).unwrap();
    let (a, b, c) = (x[0], x[1], x[2]);
    let grad = [
        a.exp() * b.ln() - c.sqrt() / (a * a),
        a.exp() / b,
        0.5 / (c.sqrt() * a),
    ];
    for (g, e) in j.gradient().iter().zip(grad) {
        assert!((g - e).abs() < 1e-12);
    }
    assert!((j.hessian(0, 0) - (a.exp() * b.ln() + 2.0 * c.sqrt() / (a * a * a))).abs() < 1e-12);
    assert!((j.hessian(1, 1) + a.exp() / (b * b)).abs() < 1e-12);
    assert!((j.hessian(2, 2) + 0.25 / (c.powf(1.5) * a)).abs() < 1e-12);
    assert!((j.hessian(0, 2) + 0.5 / (c.sqrt() * a * a)).abs() < 1e-12);
}
