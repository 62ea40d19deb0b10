//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shortcut_metropolis::harness::{
    self, presets, ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(name = "shortcut-metropolis", version, about = "Metropolis sampling with short-cut sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the summary JSON and any trace CSV.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run every method of a built-in preset and emit comparison tables.
    Reproduce {
        #[arg(long)]
        preset: String,
        /// Fraction of the full run length, in (0, 1].
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        /// Base seed; method i of the preset uses seed + i.
        #[arg(long, default_value_t = 3)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// List the built-in presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "kind": error_kind(&err),
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(err: &HarnessError) -> &'static str {
    match err {
        HarnessError::Config { .. } => "config",
        HarnessError::UnknownPreset(_) => "unknown-preset",
        HarnessError::Target(_) => "target",
        HarnessError::Sampler(_) => "sampler",
        HarnessError::Diagnostics(_) => "diagnostics",
        HarnessError::Io { .. } => "io",
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config, out_dir } => {
            let text = std::fs::read_to_string(&config).map_err(|source| HarnessError::Io {
                path: config.clone(),
                source,
            })?;
            let config = ExperimentConfig::from_json(&text)?;
            let report = harness::run_experiment(&config, &out_dir)?;
            println!(
                "{}: {} states, rejection rate {:.3}, tau {:.1}, mean {:+.4} +- {:.4} ({} evaluations)",
                report.name,
                report.states,
                report.rejection_rate,
                report.autocorrelation_time,
                report.mean,
                report.standard_error,
                report.evals
            );
            Ok(())
        }
        Command::Reproduce {
            preset,
            scale,
            seed,
            out_dir,
        } => {
            let report = harness::reproduce(&preset, scale, seed, &out_dir)?;
            for m in &report.methods {
                println!(
                    "{}: {} states, rejection rate {:.3}, tau {:.1}, mean {:+.4} +- {:.4} ({} evaluations)",
                    m.name,
                    m.states,
                    m.rejection_rate,
                    m.autocorrelation_time,
                    m.mean,
                    m.standard_error,
                    m.evals
                );
            }
            println!(
                "wrote {} method reports and tables to {}",
                report.methods.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::ListPresets => {
            for name in presets::preset_names() {
                let desc = presets::preset_description(name).unwrap_or_default();
                println!("{name}: {desc}");
            }
            Ok(())
        }
    }
}
