//! Pipeline driver behind the `gfm` binary: configuration, controller files
//! and the `synth`, `calibrate`, `simulate`, `compare` and `bode` commands.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration or input
//! error, 3 synthesis or design infeasible, 4 simulation divergence,
//! 5 comparison verdict failure.

pub mod commands;
pub mod config;
pub mod controller_file;
mod output;

pub use commands::{
    cmd_bode, cmd_calibrate, cmd_compare, cmd_simulate, cmd_synth, ControllerChoice, Report,
};
pub use config::ProjectConfig;
pub use controller_file::{ControllerFile, LoadedController};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Divergence(String),
    #[error("verdict failed: {0}")]
    Verdict(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Verdict(_) => 5,
        }
    }
}

impl From<gfm_core::Error> for CliError {
    fn from(e: gfm_core::Error) -> Self {
        use gfm_core::Error as E;
        let text = e.to_string();
        match e.root() {
            E::Divergence { .. } => CliError::Divergence(text),
            E::Infeasible { .. }
            | E::BaselineInfeasible(_)
            | E::UnstableClosedLoop(_)
            | E::NoStabilizingSolution(_)
            | E::NotHurwitz(_)
            | E::NoConvergence => CliError::Infeasible(text),
            _ => CliError::Config(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
