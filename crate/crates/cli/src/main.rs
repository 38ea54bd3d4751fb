use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use socert_cli::derivatives::{check_derivatives, FD_LIMIT};
use socert_cli::gallery::{self, Comparison};
use socert_cli::pipeline::{analyze, Settings};
use socert_cli::surface::surface_csv;
use socert_cli::CliError;
use socert_core::model::load_problem;

#[derive(Parser)]
#[command(name = "socert", version, about = "Certify second-order optimality conditions at NLP candidate points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis on a problem file.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        opts: Options,
        /// Print the canonical JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Regenerate the gallery reports and compare them with the golden files.
    Gallery {
        /// Run a single entry.
        #[arg(long)]
        name: Option<String>,
        /// Directory holding the golden reports.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Overwrite the golden reports with the regenerated ones.
        #[arg(long)]
        bless: bool,
    },
    /// Dump a constraint surface over the first two variables as CSV.
    Surface {
        file: PathBuf,
        #[arg(long)]
        constraint: String,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, default_values_t = [-1.0, 1.0])]
        range: Vec<f64>,
    },
    /// Compare analytic derivatives with finite differences.
    CheckDerivatives {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        radius: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct Options {
    /// Activity threshold |g_j(x*)| <= tol.
    #[arg(long)]
    tol_active: Option<f64>,
    /// Relative rank tolerance on singular values.
    #[arg(long)]
    tol_rank: Option<f64>,
    /// PSD tolerance, scaled by 1 + ||M||_F.
    #[arg(long)]
    tol_psd: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    radius: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 16)]
    rays: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Directions sampled for the direction-wise condition.
    #[arg(long, default_value_t = 720)]
    directions: usize,
}

impl Options {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings {
            radius: self.radius,
            samples: self.samples,
            rays: self.rays,
            seed: self.seed,
            max_iter: self.max_iter,
            directions: self.directions,
            ..Settings::default()
        };
        if let Some(t) = self.tol_active {
            s.tolerances.active = t;
            s.tolerances.feasibility = t;
        }
        if let Some(t) = self.tol_rank {
            s.tolerances.rank_rel = t;
        }
        if let Some(t) = self.tol_psd {
            s.tolerances.psd = t;
        }
        let positive = [s.tolerances.active, s.tolerances.rank_rel, s.tolerances.psd, s.radius];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) {
            bail!(CliError::Usage("tolerances and radius must be positive".into()));
        }
        if s.samples == 0 || s.rays == 0 || s.directions == 0 {
            bail!(CliError::Usage("samples, rays and directions must be positive".into()));
        }
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze { file, opts, json } => {
            let settings = opts.settings()?;
            let p = load_problem(&file)?;
            let report = analyze(&p, &settings).with_context(|| format!("analyzing {}", file.display()))?;
            if json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(report.outcome().exit_code() as u8)
        }
        Command::Gallery { name, dir, bless } => {
            let entries: Vec<_> = match &name {
                Some(n) => vec![gallery::find(n).ok_or_else(|| {
                    let known: Vec<_> = gallery::GALLERY.iter().map(|e| e.id).collect();
                    CliError::Usage(format!("unknown gallery entry `{n}` (known: {})", known.join(", ")))
                })?],
                None => gallery::GALLERY.iter().collect(),
            };
            let dir = dir.unwrap_or_else(gallery::default_golden_dir);
            let mut passed = 0;
            for e in &entries {
                let r = gallery::run_entry(e, &dir, bless)?;
                let status = if r.passed() { "pass" } else { "FAIL" };
                let detail = match &r.comparison {
                    Comparison::Match if bless => "blessed".to_string(),
                    Comparison::Match => "report matches".to_string(),
                    Comparison::Missing => format!("golden file {} missing", e.golden),
                    Comparison::Mismatch { path } => format!("report differs at {path}"),
                };
                println!("{status:<4}  {:<28} {detail}", e.id);
                if let Some(s) = &r.subset_ranks {
                    println!(
                        "      {} points: min pair rank {}, full rank {}, min pair sigma2 {:.3e}",
                        s.points, s.min_pair_rank, s.max_full_rank, s.min_pair_sigma2
                    );
                }
                if r.passed() {
                    passed += 1;
                }
            }
            println!("{passed}/{} pass", entries.len());
            Ok(if passed == entries.len() { 0 } else { 2 })
        }
        Command::Surface {
            file,
            constraint,
            grid,
            range,
        } => {
            let p = load_problem(&file)?;
            print!("{}", surface_csv(&p, &constraint, grid, range[0], range[1])?);
            Ok(0)
        }
        Command::CheckDerivatives { file, radius, seed } => {
            let p = load_problem(&file)?;
            let checks = check_derivatives(&p, radius, seed);
            let mut code = 0;
            for c in &checks {
                match &c.result {
                    Ok(v) => {
                        println!("{:<4}  {:<16} {v:.3e}", if c.passed() { "ok" } else { "FAIL" }, c.function);
                        if !c.passed() && code == 0 {
                            code = 2;
                        }
                    }
                    Err(e) => {
                        println!("error {:<16} {e}", c.function);
                        code = 1;
                    }
                }
            }
            println!("limit {FD_LIMIT:.0e}");
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
