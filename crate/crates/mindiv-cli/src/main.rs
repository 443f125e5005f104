//! `mindiv`: minimum-divergence estimation from the command line.
//!
//! Every subcommand writes one JSON report to `--out` or stdout. Failures
//! print an error report on stderr and exit with 1 (usage), 2 (data) or
//! 3 (convergence).

// `!(lo < hi)` also rejects NaN bounds.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mindiv::divergences::DivergenceKind;
use mindiv::estimators::Method;
use mindiv::quad::QuadSettings;
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Convergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Convergence(_) => "convergence",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Convergence(m) => m,
        }
    }
}

impl From<mindiv::Error> for CliError {
    fn from(e: mindiv::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else if e.is_convergence_error() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mindiv", version, about = "Minimum-divergence estimation for power-law families")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Divergence between two discrete distributions.
    Divergence {
        p: PathBuf,
        q: PathBuf,
        /// kl, renyi, dpd (density power) or ldpd (log density power).
        #[arg(long, default_value = "dpd")]
        kind: DivergenceKind,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Forward projection of a discrete distribution onto a linear family.
    Project {
        q: PathBuf,
        /// JSON file `{"functions": [[...], ...], "constants": [...]}`.
        constraints: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Fit a Student, Cauchy or Gaussian family to a sample.
    Estimate(EstimateArgs),
    /// Draw seeded samples from a contaminated model.
    Simulate {
        /// JSON file `{"mixture": {...}, "n": N, "seed": S, "replicates": R}`.
        config: PathBuf,
        /// Destination of the drawn sample.
        #[arg(long)]
        samples: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact maximization of the piecewise Jones likelihood for a
    /// one-dimensional Student location model with order above one.
    AppendixC {
        /// One-column CSV; the bundled 20-point sample when omitted.
        sample: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    pub sample: PathBuf,
    /// JSON family descriptor `{"kind": "student"|"cauchy"|"gaussian", ...}`.
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long)]
    pub method: Method,
    /// Order of the Student family or of the likelihood; overrides the descriptor.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Order of the Cauchy family; overrides the descriptor.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Known scale for the one-dimensional Cauchy fit with beta below one.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Solve the estimating equations numerically instead of using a closed form.
    #[arg(long)]
    pub equations: bool,
    /// Treat the first column as a replicate index and fit each replicate.
    #[arg(long)]
    pub replicates: bool,
    /// Accepted for reproducibility records; estimation itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Args, Debug)]
pub struct QuadArgs {
    /// Gauss-Legendre nodes per axis for family integrals.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Fixed integration box `lo,hi` per axis instead of the default map.
    #[arg(long, value_parser = parse_bounds)]
    pub quad_bounds: Option<(f64, f64)>,
}

impl QuadArgs {
    pub fn settings(&self) -> Result<QuadSettings, CliError> {
        let mut q = QuadSettings::default();
        if let Some(n) = self.quad_nodes {
            if n == 0 {
                return Err(CliError::Usage("--quad-nodes must be positive".into()));
            }
            q.nodes = n;
        }
        q.bounds = self.quad_bounds;
        Ok(q)
    }
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected 'lo,hi'")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("'{a}' is not a number"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("'{b}' is not a number"))?;
    if !(lo < hi) {
        return Err("lower bound must be below the upper bound".into());
    }
    Ok((lo, hi))
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Divergence { p, q, kind, alpha } => commands::divergence(&p, &q, kind, alpha),
        Command::Project { q, constraints, alpha } => commands::project(&q, &constraints, alpha),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Simulate { config, samples, seed } => commands::simulate(&config, &samples, seed),
        Command::AppendixC { sample, alpha, sigma } => commands::appendix_c(sample.as_deref(), alpha, sigma),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let body = json!({ "class": e.class(), "message": e.message(), "exit_code": e.code() });
    eprint!("{}", mindiv::report::render(&mindiv::report::envelope("error", body)));
    ExitCode::from(e.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let out = cli.out.clone();
    let report = match run(cli) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let text = mindiv::report::render(&report);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                return fail(&CliError::Data(format!("{}: {e}", path.display())));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
