//! Configuration-driven experiment runs on top of `hoti-core`.

pub mod commands;
pub mod config;
pub mod emit;

use std::path::Path;

use config::{ConfigError, RunConfig};
use emit::{Emitter, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Dos,
    Chern,
    Assemble,
    Evolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Dos => "dos",
            Command::Chern => "chern",
            Command::Assemble => "assemble",
            Command::Evolve => "evolve",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("numerical quality check failed while {context}: {source}")]
    Numerical {
        context: String,
        source: hoti_core::Error,
    },
    #[error("{context}: {source}")]
    Compute {
        context: String,
        source: hoti_core::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Wraps a library error with what was being done when it occurred.
    pub fn core(context: impl Into<String>) -> impl FnOnce(hoti_core::Error) -> CliError {
        let context = context.into();
        move |source| {
            if source.is_numerical_quality() {
                CliError::Numerical { context, source }
            } else {
                CliError::Compute { context, source }
            }
        }
    }

    /// 2 for configuration problems, 3 for numerical-quality failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Compute { .. } | CliError::Io(_) => 1,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("$", format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_json(&text)?)
}

/// Runs one command and writes its files plus `manifest.json` into `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let mut emitter = Emitter::new(out)?;
    match command {
        Command::Spectrum => commands::run_spectrum(cfg, &mut emitter)?,
        Command::Dos => commands::run_dos(cfg, &mut emitter)?,
        Command::Chern => commands::run_chern(cfg, &mut emitter)?,
        Command::Assemble => commands::run_assemble(cfg, &mut emitter)?,
        Command::Evolve => commands::run_evolve(cfg, &mut emitter)?,
    }
    Ok(emitter.finish(command.name(), cfg)?)
}
