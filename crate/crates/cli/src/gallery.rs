//! The shipped example problems and their golden reports.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use socert_core::linalg::{self, Matrix};
use socert_core::model::{parse_problem, NlpProblem};
use socert_core::sample_rng;

use crate::canonical::first_difference;
use crate::pipeline::{analyze, Settings};
use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub file: &'static str,
    pub golden: &'static str,
    pub note: &'static str,
    pub source: &'static str,
}

macro_rules! entry {
    ($id:literal, $note:literal) => {
        GalleryEntry {
            id: $id,
            file: concat!($id, ".nlp"),
            golden: concat!($id, ".json"),
            note: $note,
            source: include_str!(concat!("../gallery/", $id, ".nlp")),
        }
    };
}

pub const GALLERY: [GalleryEntry; 6] = [
    entry!(
        "arutyunov",
        "MFCQ holds and the direction-wise condition holds, yet no single multiplier satisfies WSOC"
    ),
    entry!(
        "rank-lemma-counterexample",
        "rank 1 at the origin and 2 nearby, while every pair of gradients has rank 2 off the origin"
    ),
    entry!(
        "minchenko",
        "two-dimensional critical subspace of dimension one: WSOC at (1,0,0) but not at (0,1,0)"
    ),
    entry!(
        "cosine-svd",
        "rank increases by one and an explicit smooth SVD exists; WSOC holds for mu2 >= mu1"
    ),
    entry!(
        "bilinear-x1x2",
        "rank increases by one but no smooth SVD exists; WSOC still holds at mu1 = mu2"
    ),
    entry!(
        "parabola-duplicated",
        "constant rank: every Lagrange multiplier gives the same restricted Hessian"
    ),
];

pub fn find(id: &str) -> Option<&'static GalleryEntry> {
    GALLERY.iter().find(|e| e.id == id)
}

pub fn default_golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("gallery").join("golden")
}

impl GalleryEntry {
    pub fn problem(&self) -> Result<NlpProblem, CliError> {
        Ok(parse_problem(self.source)?)
    }

    /// The canonical JSON report with default settings.
    pub fn report_json(&self) -> Result<String, CliError> {
        Ok(analyze(&self.problem()?, &Settings::default())?.to_json())
    }
}

/// Ranks of the gradient pairs and of all gradients at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRanks {
    pub points: usize,
    pub min_pair_rank: usize,
    pub max_full_rank: usize,
    /// Smallest `σ₂` of any pair over all points.
    pub min_pair_sigma2: f64,
}

impl SubsetRanks {
    pub fn holds(&self) -> bool {
        self.min_pair_rank == 2 && self.max_full_rank == 2
    }
}

/// Points uniform by area in the annulus `inner <= ‖x - x*‖ <= outer` of the
/// first two coordinates.
pub fn annulus_points(p: &NlpProblem, count: usize, inner: f64, outer: f64, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let mut rng = sample_rng(seed, k as u64);
            let u: f64 = rng.gen();
            let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut x = p.point.clone();
            x[0] += r * t.cos();
            x[1] += r * t.sin();
            x
        })
        .collect()
}

/// Numeric rank of every pair of inequality gradients and of all of them.
pub fn subset_ranks(p: &NlpProblem, points: &[Vec<f64>]) -> Result<SubsetRanks, CliError> {
    let (rel, abs) = (linalg::DEFAULT_RANK_REL_TOL, linalg::DEFAULT_RANK_ABS_TOL);
    let mut out = SubsetRanks {
        points: points.len(),
        min_pair_rank: usize::MAX,
        max_full_rank: 0,
        min_pair_sigma2: f64::INFINITY,
    };
    for x in points {
        let grads = p
            .inequalities
            .iter()
            .map(|c| c.function.eval_jet(x).map(|j| j.gradient().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let full = linalg::svd(&Matrix::from_rows(&grads, x.len()), rel, abs)?;
        out.max_full_rank = out.max_full_rank.max(full.rank);
        for i in 0..grads.len() {
            for j in i + 1..grads.len() {
                let pair = Matrix::from_rows(&[grads[i].clone(), grads[j].clone()], x.len());
                let s = linalg::svd(&pair, rel, abs)?;
                out.min_pair_rank = out.min_pair_rank.min(s.rank);
                out.min_pair_sigma2 = out.min_pair_sigma2.min(s.singular_values.get(1).copied().unwrap_or(0.0));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Comparison {
    Match,
    Missing,
    Mismatch { path: String },
}

#[derive(Debug, Clone)]
pub struct GalleryResult {
    pub id: &'static str,
    pub comparison: Comparison,
    pub subset_ranks: Option<SubsetRanks>,
}

impl GalleryResult {
    pub fn passed(&self) -> bool {
        self.comparison == Comparison::Match && self.subset_ranks.as_ref().is_none_or(SubsetRanks::holds)
    }
}

pub const SUBSET_POINTS: usize = 50;

pub fn compare(regenerated: &str, golden: &str) -> Comparison {
    if regenerated == golden {
        return Comparison::Match;
    }
    let path = match (
        serde_json::from_str::<serde_json::Value>(regenerated),
        serde_json::from_str::<serde_json::Value>(golden),
    ) {
        (Ok(a), Ok(b)) => first_difference(&a, &b).unwrap_or_else(|| "(formatting)".into()),
        _ => "(unparseable golden file)".into(),
    };
    Comparison::Mismatch { path }
}

/// Regenerates the report for `entry` and byte-compares it with the golden
/// file in `dir`; with `bless` the golden file is rewritten instead.
pub fn run_entry(entry: &'static GalleryEntry, dir: &Path, bless: bool) -> Result<GalleryResult, CliError> {
    let json = entry.report_json()?;
    let path = dir.join(entry.golden);
    let comparison = if bless {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        fs::write(&path, &json).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Comparison::Match
    } else {
        match fs::read_to_string(&path) {
            Ok(golden) => compare(&json, &golden),
            Err(_) => Comparison::Missing,
        }
    };
    let subset_ranks = if entry.id == "rank-lemma-counterexample" {
        let p = entry.problem()?;
        let points = annulus_points(&p, SUBSET_POINTS, 1e-4, 1e-2, Settings::default().seed);
        Some(subset_ranks(&p, &points)?)
    } else {
        None
    };
    Ok(GalleryResult {
        id: entry.id,
        comparison,
        subset_ranks,
    })
}
