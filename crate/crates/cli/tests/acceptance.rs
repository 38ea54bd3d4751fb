//! Acceptance criteria. Each criterion prints one PASS/FAIL line with the
//! measured quantities; the process fails if any criterion fails.

use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use socert_cli::gallery::{self, annulus_points, subset_ranks, GALLERY};
use socert_cli::pipeline::{analyze, Settings};
use socert_core::conjecture::{
    conjecture_certificate, constant_rank_independence, rank_probe, svd_continuity_probe, svd_oracle_validate,
    CertificateVerdict,
};
use socert_core::linalg::Matrix;
use socert_core::model::{analyze_point, NlpProblem, StationaryPointAnalysis, Tolerances};
use socert_core::multipliers::MultiplierPolytope;
use socert_core::sample_rng;
use socert_core::secondorder::{
    check_mfcq, directionwise_necessary, subspace_directions, wsoc_check, yuan_combine, RestrictedForm,
    YuanOutcome,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn problem(id: &str) -> NlpProblem {
    gallery::find(id).unwrap().problem().unwrap()
}

fn analysis(p: &NlpProblem) -> StationaryPointAnalysis {
    analyze_point(p, &Tolerances::default()).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Eigenvalues from an independent implementation.
fn oracle_lambda_min(m: &Matrix) -> f64 {
    if m.rows() == 0 {
        return 0.0;
    }
    to_na(m).symmetric_eigenvalues().min()
}

fn gallery_path(id: &str) -> String {
    format!("{}/gallery/{id}.nlp", env!("CARGO_MANIFEST_DIR"))
}

fn socert(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_socert")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn ensure(cond: bool, what: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what)
    }
}

fn minchenko() -> Outcome {
    let p = problem("minchenko");
    let a = analysis(&p);
    // ∇²L restricted to span(e1) is -2 + 4μ1 - 2μ2.
    let mut got = Vec::new();
    for (mu, expect) in [([1.0, 0.0, 0.0], 2.0), ([0.0, 1.0, 0.0], -4.0)] {
        let hand: f64 = -2.0 + 4.0 * mu[0] - 2.0 * mu[1];
        assert_eq!(hand, expect);
        let v = wsoc_check(&RestrictedForm::of_multiplier(&a, &mu), 1e-8).map_err(|e| e.to_string())?;
        let l = v.lambda_min().unwrap();
        ensure((l - expect).abs() <= 1e-9, format!("λmin at {mu:?} = {l}, expected {expect}"))?;
        got.push(l);
    }
    let report = analyze(&p, &Settings::default()).map_err(|e| e.to_string())?;
    let (code, _) = socert(&["analyze", &gallery_path("minchenko")]);
    ensure(code == 0, format!("exit code {code}"))?;
    ensure(
        report.verdict.path == "single-direction",
        format!("decided by {}", report.verdict.path),
    )?;
    Ok(format!("λmin {:.3} and {:.3}; exit 0 via {}", got[0], got[1], report.verdict.path))
}

fn arutyunov() -> Outcome {
    let p = problem("arutyunov");
    let a = analysis(&p);
    ensure(check_mfcq(&a).holds, "MFCQ fails".into())?;
    let poly = MultiplierPolytope::new(&a);
    let mut verts = poly.vertices().map_err(|e| e.to_string())?;
    verts.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    ensure(verts.len() == 3, format!("{} vertices", verts.len()))?;
    for (v, e) in verts.iter().zip(identity) {
        let dev = v.iter().zip(e).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ensure(dev <= 1e-8 && a.stationarity_residual(v) <= 1e-8, format!("vertex {v:?}"))?;
    }

    // Hand Hessians of the three constraints on the plane x3 = 0.
    let r3 = 3f64.sqrt();
    let hand = [
        DMatrix::from_row_slice(2, 2, &[0.0, 2.0 * r3, 2.0 * r3, -4.0]),
        DMatrix::from_row_slice(2, 2, &[-6.0, 0.0, 0.0, 2.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, -2.0 * r3, -2.0 * r3, -4.0]),
    ];
    let forms = a.hessians().restrict(&a.critical_basis);
    let mut worst_lmin = f64::NEG_INFINITY;
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig_gap: f64 = 0.0;
    for i in 0..=100 {
        for j in 0..=100 - i {
            let mu = [i as f64 / 100.0, j as f64 / 100.0, (100 - i - j) as f64 / 100.0];
            let m = forms.at(&mu);
            let l = oracle_lambda_min(&m);
            worst_lmin = worst_lmin.max(l);
            let trace = (0..m.rows()).map(|k| m[(k, k)]).sum::<f64>();
            worst_trace = worst_trace.max((trace + 4.0).abs());
            let h = &hand[0] * mu[0] + &hand[1] * mu[1] + &hand[2] * mu[2];
            let mut e1: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            let mut e2: Vec<f64> = to_na(&m).symmetric_eigenvalues().iter().copied().collect();
            e1.sort_by(f64::total_cmp);
            e2.sort_by(f64::total_cmp);
            for (x, y) in e1.iter().zip(&e2) {
                worst_eig_gap = worst_eig_gap.max((x - y).abs());
            }
        }
    }
    ensure(worst_lmin <= -2.0 + 1e-8, format!("max λmin {worst_lmin}"))?;
    ensure(worst_trace <= 1e-10, format!("trace deviation {worst_trace:e}"))?;
    ensure(worst_eig_gap <= 1e-10, format!("spectrum differs from hand Hessians by {worst_eig_gap:e}"))?;

    let dirs: Vec<Vec<f64>> = subspace_directions(2, 720, 42)
        .iter()
        .map(|d| a.critical_basis.matvec(d))
        .collect();
    let dw = directionwise_necessary(&poly, &a.hessians(), &dirs).map_err(|e| e.to_string())?;
    let worst = dw.worst().unwrap().value;
    ensure(worst >= -1e-9, format!("direction-wise worst {worst}"))?;
    let (code, _) = socert(&["analyze", &gallery_path("arutyunov")]);
    ensure(code == 2, format!("exit code {code}"))?;
    Ok(format!(
        "MFCQ, vertices e1 e2 e3, max λmin {worst_lmin:.12}, trace dev {worst_trace:.1e}, direction-wise worst {worst:.1e}, exit 2"
    ))
}

fn cosine() -> Outcome {
    let p = problem("cosine-svd");
    let a = analysis(&p);
    let v = svd_oracle_validate(&p, &a, 1e-2, 50, 1e-4, 42).map_err(|e| e.to_string())?;
    let recon = v.check("reconstruction").unwrap().worst;
    ensure(v.passed(), format!("oracle checks failed: {:?}", v.checks))?;
    ensure(v.points == 51, format!("{} points", v.points))?;
    ensure(recon <= 1e-9, format!("reconstruction {recon:e}"))?;

    let poly = MultiplierPolytope::new(&a);
    let u = socert_core::conjecture::activating_direction(&p, &a, 1e-2, 16, 42).map_err(|e| e.to_string())?;
    let c = conjecture_certificate(&a, &poly, &u.direction, None).map_err(|e| e.to_string())?;
    ensure(c.verdict == CertificateVerdict::Certified, format!("verdict {:?}", c.verdict))?;
    let mu = c.multiplier.clone().unwrap();
    // Re-verify from scratch: stationarity, signs and the restricted form.
    ensure(a.stationarity_residual(&mu) <= 1e-8, "μ̂ not stationary".into())?;
    ensure(mu.iter().all(|&x| x >= -1e-12), "μ̂ has a negative entry".into())?;
    let lmin = oracle_lambda_min(&a.hessians().at(&mu).congruence(&a.critical_basis));
    ensure(mu[1] - mu[0] >= -1e-9, format!("μ̂ = {mu:?}"))?;
    ensure(lmin >= -1e-9, format!("λmin {lmin}"))?;

    // Segment between the vertices (1,0,0) and (0,1,0); the restricted form
    // has eigenvalues {0, 2(μ2 - μ1)}.
    let forms = a.hessians().restrict(&a.critical_basis);
    let mut boundary = f64::NAN;
    for k in 0..=200 {
        let t = k as f64 / 200.0;
        let m = [1.0 - t, t, 0.0];
        let l = oracle_lambda_min(&forms.at(&m));
        let expect = (2.0 * (m[1] - m[0])).min(0.0);
        ensure((l - expect).abs() <= 1e-9, format!("λmin at t={t}: {l} vs {expect}"))?;
        ensure((l >= -1e-9) == (m[1] >= m[0]), format!("region mismatch at t={t}"))?;
        if k == 100 {
            boundary = l;
        }
    }
    ensure(boundary.abs() <= 1e-9, format!("boundary λmin {boundary}"))?;
    Ok(format!(
        "oracle valid at 51 points (recon {recon:.1e}); certified μ̂ = ({:.3}, {:.3}, {:.3}), λmin {lmin:.1e}; sweep ok",
        mu[0], mu[1], mu[2]
    ))
}

fn bilinear() -> Outcome {
    let p = problem("bilinear-x1x2");
    let a = analysis(&p);
    let c = svd_continuity_probe(&p, &a, 1e-2, 16, 42).map_err(|e| e.to_string())?;
    ensure(c.rays.len() == 16, format!("{} usable rays", c.rays.len()))?;
    ensure(c.right_max_angle >= 0.5, format!("V-side angle {}", c.right_max_angle))?;
    ensure(c.left_max_angle <= 1e-3, format!("U-side angle {}", c.left_max_angle))?;
    let poly = MultiplierPolytope::new(&a);
    let u = socert_core::conjecture::activating_direction(&p, &a, 1e-2, 16, 42).map_err(|e| e.to_string())?;
    let cert = conjecture_certificate(&a, &poly, &u.direction, None).map_err(|e| e.to_string())?;
    ensure(cert.verdict == CertificateVerdict::Certified, format!("verdict {:?}", cert.verdict))?;
    let mu = cert.multiplier.unwrap();
    let lmin = oracle_lambda_min(&a.hessians().at(&mu).congruence(&a.critical_basis));
    ensure(lmin >= -1e-9, format!("λmin {lmin}"))?;
    Ok(format!(
        "V-side angle {:.3} rad, U-side {:.1e} rad; certified with λmin {lmin:.1e}",
        c.right_max_angle, c.left_max_angle
    ))
}

fn counterexample() -> Outcome {
    let p = problem("rank-lemma-counterexample");
    let points = annulus_points(&p, 50, 1e-4, 1e-2, 42);
    for x in &points {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        ensure((1e-4..=1e-2).contains(&r), format!("radius {r}"))?;
    }
    let s = subset_ranks(&p, &points).map_err(|e| e.to_string())?;
    ensure(s.min_pair_rank == 2, format!("a pair has rank {}", s.min_pair_rank))?;
    Ok(format!(
        "50 points: every pair rank 2 (min σ2 {:.2e}), full rank {}",
        s.min_pair_sigma2, s.max_full_rank
    ))
}

fn parabola() -> Outcome {
    let p = problem("parabola-duplicated");
    let a = analysis(&p);
    let probe = rank_probe(&p, &a, 1e-2, 200, 42).map_err(|e| e.to_string())?;
    ensure(
        probe.base_rank == 1 && probe.max_rank == 1,
        format!("r = {}, r_max = {}", probe.base_rank, probe.max_rank),
    )?;
    let poly = MultiplierPolytope::new(&a);
    let forms = a.hessians().restrict(&a.critical_basis);
    let dev = constant_rank_independence(&poly, &forms, &probe, 100, 42).map_err(|e| e.to_string())?;
    ensure(dev <= 1e-10, format!("deviation {dev:e}"))?;
    let verts = poly.vertices().map_err(|e| e.to_string())?;
    for v in &verts {
        let ok = wsoc_check(&RestrictedForm::of_multiplier(&a, v), 1e-8).map_err(|e| e.to_string())?;
        ensure(ok.holds(), format!("vertex {v:?} fails WSOC"))?;
        let l = oracle_lambda_min(&forms.at(v));
        ensure((l - 2.0).abs() <= 1e-12, format!("restricted form {l} at {v:?}"))?;
    }
    Ok(format!(
        "r = r_max = 1 over 200 samples; deviation {dev:.1e}; {} vertices pass WSOC",
        verts.len()
    ))
}

fn random_symmetric(rng: &mut impl Rng, s: usize) -> Matrix {
    let mut m = Matrix::from_fn(s, s, |_, _| rng.gen_range(-1.0..1.0));
    m.symmetrize();
    m
}

fn yuan() -> Outcome {
    let eps = 1e-8;
    let audit = |p: &Matrix, q: &Matrix, out: &YuanOutcome| -> Result<bool, String> {
        match out {
            YuanOutcome::Combined { alpha, beta, .. } => {
                ensure((alpha + beta - 1.0).abs() <= 1e-15 && *alpha >= 0.0 && *beta >= 0.0, "weights".into())?;
                let mut m = p.scaled(*alpha);
                m.add_scaled(*beta, q);
                let l = oracle_lambda_min(&m);
                ensure(l >= -eps * (1.0 + m.frobenius_norm()), format!("unsound combination λmin {l}"))?;
                Ok(false)
            }
            YuanOutcome::Refuted { witness } => {
                let v = p.quadratic_form(witness).max(q.quadratic_form(witness));
                ensure(v < 0.0, format!("witness value {v}"))?;
                Ok(false)
            }
            YuanOutcome::Inconclusive { .. } => Ok(true),
        }
    };
    let (mut combined, mut refuted, mut undecided) = (0, 0, 0);
    for k in 0..1000u64 {
        let mut rng = sample_rng(1, k);
        let s = rng.gen_range(1..=6);
        let p = random_symmetric(&mut rng, s);
        let q = random_symmetric(&mut rng, s);
        let out = yuan_combine(&p, &q, eps).map_err(|e| e.to_string())?;
        match audit(&p, &q, &out)? {
            true => undecided += 1,
            false if matches!(out, YuanOutcome::Combined { .. }) => combined += 1,
            false => refuted += 1,
        }
    }
    let mut family_inconclusive = 0;
    for k in 0..1000u64 {
        let mut rng = sample_rng(2, k);
        let s = rng.gen_range(1..=6);
        let (p, q) = if k % 2 == 0 {
            // Q = -P + c vvᵀ
            let p = random_symmetric(&mut rng, s);
            let v: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = rng.gen_range(0.0..2.0);
            let q = Matrix::from_fn(s, s, |i, j| -p[(i, j)] + c * v[i] * v[j]);
            (p, q)
        } else {
            // P = S + E, Q = S - cE with S PSD, so (cP + Q)/(1 + c) = S.
            let r = rng.gen_range(0..=s);
            let g = Matrix::from_fn(s, r, |_, _| rng.gen_range(-1.0..1.0));
            let base = g.matmul(&g.transpose());
            let e = random_symmetric(&mut rng, s);
            let c = rng.gen_range(0.1..3.0);
            let mut p = base.clone();
            p.add_scaled(1.0, &e);
            let mut q = base;
            q.add_scaled(-c, &e);
            (p, q)
        };
        let out = yuan_combine(&p, &q, eps).map_err(|e| e.to_string())?;
        if audit(&p, &q, &out)? {
            family_inconclusive += 1;
        }
    }
    ensure(family_inconclusive == 0, format!("{family_inconclusive} inconclusive on hypothesis families"))?;
    Ok(format!(
        "1000 random pairs sound ({combined} combined, {refuted} refuted, {undecided} inconclusive); hypothesis families 0/1000 inconclusive"
    ))
}

fn derivatives() -> Outcome {
    let mut worst: f64 = 0.0;
    for e in &GALLERY {
        let (code, out) = socert(&["check-derivatives", &gallery_path(e.id)]);
        ensure(code == 0, format!("{}: exit {code}", e.id))?;
        let p = e.problem().unwrap();
        for c in socert_cli::derivatives::check_derivatives(&p, 1e-2, 42) {
            let v = c.result.map_err(|m| format!("{}: {m}", e.id))?;
            ensure(v <= 1e-5, format!("{} {}: {v:e}", e.id, c.function))?;
            worst = worst.max(v);
        }
        let _ = out;
    }
    Ok(format!("six files, worst deviation {worst:.1e}"))
}

/// Vertices of `{ν : Jᵀν = -∇f, ν_i >= 0 for i >= m}` via nalgebra.
fn brute_force_vertices(a: &StationaryPointAnalysis) -> Vec<Vec<f64>> {
    let (k, n, m) = (a.num_rows(), a.dim(), a.num_equalities);
    let g = a.grad_objective();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << (k - m)) {
        let zeros: Vec<usize> = (0..k - m).filter(|i| mask & (1 << i) != 0).map(|i| i + m).collect();
        let rows = n + zeros.len();
        let sys = DMatrix::from_fn(rows, k, |r, c| {
            if r < n {
                a.jacobian[(c, r)]
            } else if zeros[r - n] == c {
                1.0
            } else {
                0.0
            }
        });
        let rhs = DVector::from_fn(rows, |r, _| if r < n { -g[r] } else { 0.0 });
        let svd = sys.clone().svd(true, true);
        if svd.rank(1e-9) < k {
            continue;
        }
        let x = svd.solve(&rhs, 1e-12).unwrap();
        if (&sys * &x - &rhs).amax() > 1e-9 || (m..k).any(|i| x[i] < -1e-9) {
            continue;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        if !out.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
            out.push(x);
        }
    }
    out
}

fn lp_cross_validation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for (g, e) in GALLERY.iter().enumerate() {
        let a = analysis(&e.problem().unwrap());
        let poly = MultiplierPolytope::new(&a);
        let verts = brute_force_vertices(&a);
        ensure(!verts.is_empty(), format!("{}: no vertices", e.id))?;
        for t in 0..100u64 {
            let mut rng = sample_rng(900 + g as u64, t);
            let c: Vec<f64> = (0..poly.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let vals: Vec<f64> = verts.iter().map(|v| v.iter().zip(&c).map(|(x, y)| x * y).sum()).collect();
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let got_hi = poly.maximize(&c).value().ok_or(format!("{}: max not attained", e.id))?;
            let got_lo = poly.minimize(&c).value().ok_or(format!("{}: min not attained", e.id))?;
            worst = worst.max((got_hi - hi).abs()).max((got_lo - lo).abs());
            solves += 2;
        }
    }
    ensure(worst <= 1e-8, format!("worst gap {worst:e}"))?;
    Ok(format!("{solves} LP solves, worst gap to enumeration {worst:.1e}"))
}

fn determinism() -> Outcome {
    for e in &GALLERY {
        let path = gallery_path(e.id);
        let args = ["analyze", path.as_str(), "--json", "--seed", "42"];
        let (c1, o1) = socert(&args);
        let (c2, o2) = socert(&args);
        ensure(c1 == c2 && o1 == o2, format!("{}: runs differ", e.id))?;
        ensure(!o1.is_empty(), format!("{}: empty output", e.id))?;
    }
    Ok("six files, byte-identical JSON across two runs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("minchenko WSOC values and single-direction path", minchenko),
        ("arutyunov WSOC fails for every multiplier", arutyunov),
        ("cosine oracle, certificate and WSOC region", cosine),
        ("bilinear V-side discontinuity, still certified", bilinear),
        ("rank-lemma counterexample pair ranks", counterexample),
        ("parabola constant rank", parabola),
        ("yuan combiner soundness", yuan),
        ("derivative check on the gallery", derivatives),
        ("LP cross-validation against enumeration", lp_cross_validation),
        ("deterministic JSON reports", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
