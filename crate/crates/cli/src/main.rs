use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zeno_cli::commands::{self, CliError, EXIT_BOUND_VIOLATION, EXIT_CONFIG, EXIT_FAILURE};
use zeno_cli::config::{ExperimentConfig, Preset};

const BUDGET_ENV: &str = "ZENO_BLOCK_BUDGET";

/// Thermal Zeno-subspace experiments.
#[derive(Parser)]
#[command(name = "zeno", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate P(t) for every configured temperature and write CSV.
    Simulate {
        #[arg(long, value_name = "PATH", required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Use a built-in configuration instead of --config.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// CSV destination (stdout if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Print coupling and temperature thresholds for a tolerance eps.
    Thresholds {
        #[arg(long, value_name = "PATH", required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the randomised bound-verification suites.
    CheckBounds {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Monte-Carlo samples for the geometric-factor check.
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print a built-in configuration.
    Preset {
        #[arg(value_enum)]
        name: Preset,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn load(config: Option<PathBuf>, preset: Option<Preset>) -> Result<ExperimentConfig, CliError> {
    match (config, preset) {
        (_, Some(p)) => Ok(p.config()),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
            Ok(ExperimentConfig::parse(&text)?)
        }
        (None, None) => Err(CliError::new(EXIT_CONFIG, "either --config or --preset is required")),
    }
}

fn budget_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&b| b > 0)
            .map(Some)
            .ok_or_else(|| CliError::new(EXIT_CONFIG, format!("{BUDGET_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            preset,
            out,
            svg,
        } => {
            let cfg = load(config, preset)?;
            let budget = budget_from_env()?;
            let table = commands::simulate(&cfg, budget, &mut |line| eprintln!("{line}"))?;
            let csv = table
                .to_csv()
                .map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
            emit(out.as_deref(), &csv)?;
            if let Some(path) = svg {
                let title = format!("Survival probability, D = {}", cfg.bath.len());
                std::fs::write(&path, table.to_svg(&title))
                    .map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Thresholds {
            config,
            preset,
            eps,
            out,
        } => {
            let cfg = load(config, preset)?;
            emit(out.as_deref(), &commands::thresholds(&cfg, eps)?)
        }
        Command::CheckBounds {
            seed,
            trials,
            samples,
            threads,
            out,
        } => {
            let (report, ok) = commands::check_bounds(seed, trials, samples, threads)?;
            emit(out.as_deref(), &report)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::new(EXIT_BOUND_VIOLATION, "bound violation detected"))
            }
        }
        Command::Preset { name, out } => emit(out.as_deref(), &name.config().to_text()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
