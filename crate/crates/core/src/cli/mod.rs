//! Command-line driver: scenario loading, presets, and CSV output.
//!
//! Exit codes: 0 on success, 1 on any validation or I/O error, 2 when
//! `--strict` is set and a comparison row is flagged (`|z| > 5`).
//!
//! Relative `--out` paths are resolved against `$COLLAPSE_LAB_OUT_DIR` when
//! it is set; without `--out` the CSV goes to stdout.

pub mod output;
pub mod scenario_file;

use crate::engine::{
    compare, oracle_distribution, run_ensemble, run_ensemble_with_workers, EngineError, Regime, Scenario,
    DEFAULT_ORACLE_STEPS,
};
use clap::{Args, Parser, Subcommand};
use scenario_file::{parse_interpretation, parse_scenario, preset, ScenarioFileError};
use std::path::PathBuf;
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "COLLAPSE_LAB_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioFileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "collapse-lab", version, about = "Monte Carlo laboratory for single-event state reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble and write the outcome report.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunOptions,
        /// Also write the capture-time histogram to this file.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Write the current profile and cumulative capture probability.
    Trace {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the exact outcome distribution from the probability tree.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_ORACLE_STEPS)]
        steps: usize,
        #[arg(long)]
        interpretation: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ensemble and score it against an oracle, optionally computed
    /// under a different regime.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunOptions,
        /// Regime for the oracle: paper-naive, observer-only, quantum-jump or
        /// spontaneous-rate:<rate>. Defaults to the scenario's own regime.
        #[arg(long)]
        against: Option<String>,
    },
    /// Print a built-in scenario document.
    Preset { name: String },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunOptions {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// unconditional-density or hazard-rate
    #[arg(long)]
    pub interpretation: Option<String>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_STEPS)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 when any |z| exceeds 5.
    #[arg(long)]
    pub strict: bool,
}

fn load(source: &Source) -> Result<Scenario, CliError> {
    let text = match (&source.scenario, &source.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?,
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::Usage("one of --scenario or --preset is required".into())),
    };
    Ok(parse_scenario(&text)?)
}

fn apply_overrides(mut scenario: Scenario, run: &RunOptions) -> Result<Scenario, CliError> {
    if let Some(n) = run.n {
        scenario.n_trajectories = n;
    }
    if let Some(seed) = run.seed {
        scenario.master_seed = seed;
    }
    if let Some(text) = &run.interpretation {
        scenario.rule_a_interpretation = interpretation_arg(text)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn interpretation_arg(text: &str) -> Result<crate::RuleAInterpretation, CliError> {
    parse_interpretation(text).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown interpretation `{text}` (expected unconditional-density or hazard-rate)"
        ))
    })
}

/// Parses a regime name as accepted by `compare --against`.
pub fn parse_regime_arg(text: &str) -> Result<Regime, CliError> {
    match text {
        "paper-naive" => Ok(Regime::PaperNaive),
        "observer-only" => Ok(Regime::ObserverOnly),
        "quantum-jump" => Ok(Regime::QuantumJump),
        other => other
            .strip_prefix("spontaneous-rate:")
            .and_then(|r| r.parse::<f64>().ok())
            .map(|rate| Regime::SpontaneousRate { rate })
            .ok_or_else(|| CliError::Usage(format!("unknown regime `{other}`"))),
    }
}

fn resolve_out(path: &std::path::Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
                    path: parent.to_path_buf(),
                    source: e,
                })?;
            }
            std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
        }
    }
}

/// Runs the ensemble, scores it, writes the report and returns the exit code.
fn run_report(
    scenario: &Scenario,
    oracle_scenario: &Scenario,
    run: &RunOptions,
    histogram: Option<&PathBuf>,
) -> Result<i32, CliError> {
    let stats = match run.workers {
        Some(w) => run_ensemble_with_workers(scenario, w)?,
        None => run_ensemble(scenario)?,
    };
    let oracle = oracle_distribution(oracle_scenario, run.steps)?;
    let comparison = compare(&stats, &oracle);
    write_output(run.out.as_ref(), &output::emit_report(&stats, &oracle, &comparison))?;
    if let Some(path) = histogram {
        write_output(Some(path), &output::emit_histogram(&stats))?;
    }
    for row in comparison.rows.iter().filter(|r| r.flagged) {
        eprintln!(
            "flagged: {} empirical {:.6} vs oracle {:.6} ({}), z = {:+.1}",
            row.outcome,
            row.empirical,
            row.exact,
            oracle_scenario.regime.name(),
            row.z
        );
    }
    Ok(if run.strict && comparison.any_flagged() {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    })
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run {
            source,
            run,
            histogram,
        } => {
            let scenario = apply_overrides(load(source)?, run)?;
            run_report(&scenario, &scenario, run, histogram.as_ref())
        }
        Command::Compare {
            source,
            run,
            against,
        } => {
            let scenario = apply_overrides(load(source)?, run)?;
            let oracle_scenario = match against {
                Some(name) => scenario.with_regime(parse_regime_arg(name)?),
                None => scenario.clone(),
            };
            run_report(&scenario, &oracle_scenario, run, None)
        }
        Command::Trace {
            source,
            points,
            out,
        } => {
            let scenario = load(source)?;
            let trace = output::emit_trace(&scenario.profile, *points)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(out.as_ref(), &trace)?;
            Ok(EXIT_OK)
        }
        Command::Oracle {
            source,
            steps,
            interpretation,
            out,
        } => {
            let mut scenario = load(source)?;
            if let Some(text) = interpretation {
                scenario.rule_a_interpretation = interpretation_arg(text)?;
            }
            let oracle = oracle_distribution(&scenario, *steps)?;
            write_output(out.as_ref(), &output::emit_oracle(&oracle))?;
            Ok(EXIT_OK)
        }
        Command::Preset { name } => {
            print!("{}", preset(name)?);
            Ok(EXIT_OK)
        }
    }
}

/// Entry point used by the binary; parse failures map to exit code 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
