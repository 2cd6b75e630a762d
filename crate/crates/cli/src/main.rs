//! `cvrnn` command-line interface.
//!
//! Exit status: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors.

mod dataset;
mod evaluate;
mod generate;
mod output;
mod segment;
mod spectrum;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use cvrnn::pipeline::PipelineConfig;

/// Marks an error as a usage problem (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Reads a config file; unreadable or invalid files are usage errors.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    PipelineConfig::parse(&text, &path.display().to_string()).map_err(|e| usage(e.to_string()))
}

pub fn config_or_default(path: Option<&PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(PipelineConfig::default()),
    }
}

#[derive(Parser)]
#[command(name = "cvrnn", version, about = "Complex-valued recurrent network image segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic shapes dataset
    Generate(generate::Args),
    /// Segment one image
    Segment(segment::Args),
    /// Score segmentations against truth maps
    Evaluate(evaluate::Args),
    /// Dump leading eigenpairs and mode contributions of a system matrix
    Spectrum(spectrum::SpectrumArgs),
    /// Compare low-rank modal dynamics with exact propagation
    Lowrank(spectrum::LowrankArgs),
    /// Grid search over configuration keys
    Sweep(sweep::Args),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Segment(a) => segment::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Spectrum(a) => spectrum::run_spectrum(a),
        Command::Lowrank(a) => spectrum::run_lowrank(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
