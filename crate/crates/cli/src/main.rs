#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyheat::large_deviation::growth_backends;
use hyheat::montecarlo::moment_estimators;

mod commands;
mod config;
mod error;
mod output;
mod presets;

use config::{Overrides, ResolvedConfig};
use error::CliError;

/// Lyapunov exponents of heat equations with Markov-switching coefficients.
#[derive(Parser)]
#[command(name = "hyheat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in model (see `hyheat list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML model configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root under which a timestamped run directory is created.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Seed for all random draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Growth-rate backend for the tilted eigenvalue.
    #[arg(long)]
    lambda_backend: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form exponents and stability verdicts.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo estimates of the sample and moment exponents.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of simulated paths.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        paths: Option<u64>,
        /// Simulation horizon T.
        #[arg(long)]
        horizon: Option<f64>,
        /// Moment estimator (see `hyheat list`).
        #[arg(long)]
        moment_estimator: Option<String>,
        /// Exit with code 3 if any estimate is flagged as heavy-tailed.
        #[arg(long)]
        strict: bool,
    },
    /// Compare the variational growth rate with the tilted eigenvalue.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Check K random generators and weights instead of the model.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        random_trials: Option<u64>,
    },
    /// List presets and registered strategies.
    List,
}

fn overrides(m: &ModelArgs) -> Overrides {
    Overrides {
        seed: m.seed,
        p: m.p.clone(),
        lambda_backend: m.lambda_backend.clone(),
        ..Default::default()
    }
}

fn load(m: &ModelArgs, ov: &Overrides) -> Result<Option<ResolvedConfig>, CliError> {
    match (&m.preset, &m.config) {
        (Some(name), _) => {
            let (canonical, text) = presets::find(name).ok_or_else(|| {
                CliError::Usage(format!("unknown preset {name:?}; available:\n{}", presets::listing()))
            })?;
            config::load(&format!("preset:{canonical}"), text, None, ov).map(Some)
        }
        (None, Some(path)) => config::load_file(path, ov).map(Some),
        (None, None) => Ok(None),
    }
}

fn required(c: Option<ResolvedConfig>) -> Result<ResolvedConfig, CliError> {
    c.ok_or_else(|| CliError::Usage("one of --preset or --config is required".into()))
}

fn run(cli: Cli) -> Result<Option<PathBuf>, CliError> {
    match cli.command {
        Command::Analyze { model } => {
            let cfg = required(load(&model, &overrides(&model))?)?;
            commands::analyze(&cfg, &model.out_dir).map(Some)
        }
        Command::Simulate { model, paths, horizon, moment_estimator, strict } => {
            let ov = Overrides {
                paths: paths.map(|p| p as usize),
                horizon,
                moment_estimator,
                ..overrides(&model)
            };
            let cfg = required(load(&model, &ov)?)?;
            commands::simulate(&cfg, &model.out_dir, strict).map(Some)
        }
        Command::Verify { model, random_trials } => {
            let ov = overrides(&model);
            let cfg = load(&model, &ov)?;
            let seed = model.seed.or(cfg.as_ref().map(|c| c.estimator.seed)).unwrap_or(1);
            let backend = match (&model.lambda_backend, &cfg) {
                (Some(b), _) => {
                    growth_backends().get(b)?;
                    b.clone()
                }
                (None, Some(c)) => c.estimator.lambda_backend.clone(),
                (None, None) => growth_backends().default_name().to_string(),
            };
            commands::verify(cfg.as_ref(), random_trials.map(|k| k as usize), seed, &backend, &model.out_dir).map(Some)
        }
        Command::List => {
            println!("presets:\n{}", presets::listing());
            println!("lambda backends:");
            for b in growth_backends().iter() {
                println!("  {:<24} {}", b.name(), b.description());
            }
            println!("moment estimators:");
            for e in moment_estimators().iter() {
                println!("  {:<24} {}", e.name(), e.description());
            }
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Some(dir)) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
