use nalgebra::DMatrix;
use proptest::prelude::*;
use socert_core::linalg::{self, Matrix};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn orthonormality_error(q: &Matrix) -> f64 {
    q.transpose().matmul(q).sub(&Matrix::identity(q.cols())).max_abs()
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| {
            let rows: Vec<Vec<f64>> = v.chunks(c).map(|s| s.to_vec()).collect();
            Matrix::from_rows(&rows, c)
        })
    })
}

/// Product of random factors with a prescribed rank.
fn low_rank(max: usize) -> impl Strategy<Value = (Matrix, usize)> {
    (1..=max, 1..=max, 0..=max).prop_flat_map(|(r, c, k)| {
        let k = k.min(r).min(c);
        (
            prop::collection::vec(-3.0f64..3.0, r * k),
            prop::collection::vec(-3.0f64..3.0, k * c),
        )
            .prop_map(move |(a, b)| {
                let a = Matrix::from_fn(r, k, |i, j| a[i * k + j]);
                let b = Matrix::from_fn(k, c, |i, j| b[i * c + j]);
                (a.matmul(&b), k)
            })
    })
}

fn symmetric(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-5.0f64..5.0, n * n).prop_map(move |v| {
            let mut m = Matrix::from_fn(n, n, |i, j| v[i * n + j]);
            m.symmetrize();
            m
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn svd_reconstructs_and_is_orthogonal(a in matrix(7, 7)) {
        let s = linalg::svd(&a, 1e-8, 1e-12).unwrap();
        let scale = 1.0 + a.max_abs();
        prop_assert!(s.reconstruct().sub(&a).max_abs() <= 1e-11 * scale);
        prop_assert!(orthonormality_error(&s.u) <= 1e-12);
        prop_assert!(orthonormality_error(&s.v) <= 1e-12);
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.singular_values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn singular_values_match_nalgebra(a in matrix(6, 6)) {
        let ours = linalg::svd(&a, 1e-8, 1e-12).unwrap().singular_values;
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        let scale = 1.0 + a.max_abs();
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rank_of_constructed_products((a, k) in low_rank(6)) {
        let s = linalg::svd(&a, 1e-8, 1e-12).unwrap();
        // A random product of rank-k factors has rank k with probability one;
        // the sampled factors may still be badly conditioned, so allow rank <= k.
        prop_assert!(s.rank <= k);
        let null = s.nullspace();
        prop_assert_eq!(null.cols(), a.cols() - s.rank);
        prop_assert!(a.matmul(&null).max_abs() <= 1e-8 * (1.0 + a.max_abs()));
        let left = s.left_nullspace();
        prop_assert!(a.transpose().matmul(&left).max_abs() <= 1e-8 * (1.0 + a.max_abs()));
    }

    #[test]
    fn eigenvalues_match_nalgebra(m in symmetric(7)) {
        let e = linalg::sym_eigen(&m).unwrap();
        let mut theirs: Vec<f64> = to_na(&m).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + m.max_abs()));
        }
        prop_assert!(orthonormality_error(&e.vectors) <= 1e-12);
        for k in 0..m.rows() {
            let v = e.vector(k);
            let mv = m.matvec(&v);
            for (a, b) in mv.iter().zip(&v) {
                prop_assert!((a - e.values[k] * b).abs() <= 1e-10 * (1.0 + m.max_abs()));
            }
        }
    }

    #[test]
    fn eigenvalues_of_gram_are_squared_singular_values(a in matrix(5, 5)) {
        let g = a.transpose().matmul(&a);
        let mut ev = linalg::sym_eigen(&g).unwrap().values;
        ev.reverse();
        let sv = linalg::svd(&a, 1e-8, 1e-12).unwrap().singular_values;
        for (l, s) in ev.iter().zip(&sv) {
            prop_assert!((l - s * s).abs() <= 1e-9 * (1.0 + g.max_abs()));
        }
    }

    #[test]
    fn lstsq_matches_normal_equations(a in matrix(6, 4), b in prop::collection::vec(-5.0f64..5.0, 6)) {
        let b = &b[..a.rows()];
        let (x, rank) = linalg::lstsq(&a, b, 1e-8, 1e-12).unwrap();
        if rank == a.cols() {
            // Residual is orthogonal to the column space.
            let r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(p, q)| p - q).collect();
            let atr = a.tr_matvec(&r);
            prop_assert!(atr.iter().all(|v| v.abs() <= 1e-8 * (1.0 + a.max_abs()).powi(2)));
        }
    }
}

#[test]
fn sign_convention_is_deterministic() {
    let a = Matrix::from_rows(&[vec![0.0, -3.0], vec![2.0, 0.0]], 2);
    let s = linalg::svd(&a, 1e-8, 1e-12).unwrap();
    for k in 0..2 {
        let v = s.v.column(k);
        let (idx, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv + 1e-12 { (i, x.abs()) } else { (bi, bv) });
        assert!(v[idx] > 0.0);
    }
    let again = linalg::svd(&a, 1e-8, 1e-12).unwrap();
    assert_eq!(s.u, again.u);
    assert_eq!(s.v, again.v);
}
