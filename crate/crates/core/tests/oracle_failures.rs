use socert_core::conjecture::{svd_oracle_validate, ConjectureError};
use socert_core::model::{analyze_point, parse_problem, Tolerances};

const COSINE: &str = include_str!("../../cli/gallery/cosine-svd.nlp");

fn validate(text: &str) -> socert_core::conjecture::OracleValidation {
    let p = parse_problem(text).unwrap();
    let a = analyze_point(&p, &Tolerances::default()).unwrap();
    svd_oracle_validate(&p, &a, 1e-2, 20, 1e-4, 42).unwrap()
}

#[test]
fn shipped_oracle_passes() {
    let v = validate(COSINE);
    assert!(v.passed(), "{v:?}");
    assert_eq!(v.points, 21);
}

#[test]
fn non_orthogonal_columns_are_itemized() {
    let text = COSINE.replace("svd_u 1 2 -1/sqrt(2)", "svd_u 1 2 -1/sqrt(2) + 0.3");
    let v = validate(&text);
    let c = v.check("orthogonality-at-point").unwrap();
    assert!(!c.passed);
    assert!(c.failures.iter().any(|f| f.contains("U columns 1 and 2")));
    assert!(c.failures.iter().any(|f| f.contains("U columns 2 and 3")));
    assert!(!c.failures.iter().any(|f| f.starts_with('V')));
}

#[test]
fn shifted_entry_fails_reconstruction() {
    let text = COSINE.replace("svd_u 3 1 -2/sqrt(6)", "svd_u 3 1 -2/sqrt(6) + 1e-3/sqrt(6)");
    let v = validate(&text);
    let c = v.check("reconstruction").unwrap();
    assert!(!c.passed);
    // Row 3 of UΣVᵀ is off by 1e-3 in its x3 column.
    assert!((c.worst - 1e-3).abs() < 1e-6, "{}", c.worst);
    assert!(c.failures[0].contains("entry (3, 3)"), "{}", c.failures[0]);
}

#[test]
fn unsigned_sigma_mismatch_fails_reconstruction() {
    // |2 sin(x1+x2)| loses the sign that the U, V columns rely on.
    let text = COSINE.replace("svd_sigma 2 2*sin(x1 + x2)", "svd_sigma 2 sqrt((2*sin(x1 + x2))^2 + 1e-30)");
    let v = validate(&text);
    assert!(!v.check("reconstruction").unwrap().passed);
}

#[test]
fn spurious_trailing_value_is_reported() {
    let text = COSINE
        .replace("svd_sigma 3 0", "svd_sigma 3 0.5")
        .replace("svd_u 1 3 1/sqrt(3)", "svd_u 1 3 0")
        .replace("svd_u 2 3 1/sqrt(3)", "svd_u 2 3 0")
        .replace("svd_u 3 3 -1/sqrt(3)", "svd_u 3 3 0");
    let v = validate(&text);
    // U's third column is now zero, so the product is unchanged.
    assert!(v.check("reconstruction").unwrap().passed);
    assert!(!v.check("trailing-singular-values").unwrap().passed);
    assert!(!v.check("orthogonality-at-point").unwrap().passed);
}

#[test]
fn missing_oracle_is_an_error() {
    let text: String = COSINE.lines().filter(|l| !l.starts_with("svd_")).map(|l| format!("{l}\n")).collect();
    let p = parse_problem(&text).unwrap();
    let a = analyze_point(&p, &Tolerances::default()).unwrap();
    assert!(matches!(svd_oracle_validate(&p, &a, 1e-2, 5, 1e-4, 1), Err(ConjectureError::NoOracle)));
}
