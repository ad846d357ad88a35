#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

mod commands;
mod config;
mod output;

/// Exit statuses: 0 success, 1 invalid input or runtime error, 2 usage error, 3 a numerical check failed.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub status: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: "config", message: message.into(), status: 1 }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { kind: "io", message: format!("{}: {e}", path.display()), status: 1 }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self { kind: "check_failed", message: message.into(), status: 3 }
    }
}

impl From<stablefp::Error> for CliError {
    fn from(e: stablefp::Error) -> Self {
        use stablefp::Error as E;
        let kind = match &e {
            E::Config(_) => "config",
            E::Argument(_) => "argument",
            E::StepSize { .. } => "step_size",
            E::Divergence { .. } => "divergence",
            E::Degenerate(_) => "degenerate",
            E::Io(_) => "io",
        };
        Self { kind, message: e.to_string(), status: 1 }
    }
}

#[derive(Parser)]
#[command(name = "stablefp", version, about = "Alpha-stable McKean-Vlasov experiments on the torus")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; takes precedence over STABLEFP_OUT and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set solver.dt=5e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Time integrability exponent, a number or `inf`.
    #[arg(long)]
    q: Option<String>,
    /// Take missing values from `alpha`, `analysis.beta` and `analysis.q`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct AllArgs {
    /// Run only these criteria (repeatable).
    #[arg(long)]
    only: Vec<u8>,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic-function validation table for sampled increments.
    SampleStable(ConfigArgs),
    /// Besov norms and shell profiles of a field.
    Besov(ConfigArgs),
    /// Solve the nonlinear Fokker-Planck equation.
    Fpe(ConfigArgs),
    /// Backward Kolmogorov solve along the forward drift.
    Kbe(ConfigArgs),
    /// Forward/backward duality gap.
    Duality(ConfigArgs),
    /// Interacting particle run compared against the density solve.
    Particles(ConfigArgs),
    /// Pathwise gap series, self-convergence ladder and strong-order fit.
    Pathwise(ConfigArgs),
    /// Short-time regularity rates of the density.
    Rate(ConfigArgs),
    /// Scaling regime of a drift class.
    Classify(ClassifyArgs),
    /// The acceptance suite; exits zero iff every criterion passes.
    All(AllArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let out = cli.out.as_deref();
    let load = |a: &ConfigArgs| config::ExperimentConfig::load(&a.config, &a.overrides);
    match &cli.command {
        Command::SampleStable(a) => commands::sample_stable(&load(a)?, out),
        Command::Besov(a) => commands::besov(&load(a)?, out),
        Command::Fpe(a) => commands::fpe(&load(a)?, out),
        Command::Kbe(a) => commands::kbe(&load(a)?, out),
        Command::Duality(a) => commands::duality(&load(a)?, out),
        Command::Particles(a) => commands::particles(&load(a)?, out),
        Command::Pathwise(a) => commands::pathwise(&load(a)?, out),
        Command::Rate(a) => commands::rate(&load(a)?, out),
        Command::Classify(a) => {
            let cfg = match &a.config {
                Some(p) => Some(config::ExperimentConfig::load(p, &a.overrides)?),
                None => None,
            };
            commands::classify(a.alpha, a.beta, a.q.as_deref(), cfg.as_ref(), out)
        }
        Command::All(a) => commands::all(&a.only, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.render().to_string();
            report(&CliError { kind: "usage", message: format!("{msg}: {}", detail.trim()), status: 2 });
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.status)
        }
    }
}

fn report(e: &CliError) {
    eprintln!("{}", json!({ "error": { "kind": e.kind, "message": e.message } }));
}
