//! Front end for scenario files: solvability checks, gain synthesis,
//! simulation with CSV export, and parameter sweeps.

pub mod commands;
pub mod manifest;
pub mod scenario_file;

pub use commands::{
    cmd_check, cmd_run, cmd_sweep, cmd_synth, load_gains, manifest_path, sweep_table, Overrides,
    SweepGrid, SweepRow,
};
pub use manifest::RunManifest;
pub use scenario_file::{parse_scenario, to_toml, Loaded};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// A mandatory check failed, synthesis was impossible or tracking missed
/// its threshold.
pub const EXIT_FAILED: i32 = 1;
/// Unreadable or malformed input.
pub const EXIT_INPUT: i32 = 2;
/// The simulation diverged.
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", parse_message(*line, *column, message))]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] coopreg_core::Error),
}

fn parse_message(line: usize, column: usize, message: &str) -> String {
    if line == 0 {
        format!("invalid scenario: {message}")
    } else {
        format!("invalid scenario at line {line}, column {column}: {message}")
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use coopreg_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Io(_) => EXIT_INPUT,
            CliError::Core(E::Divergence { .. }) => EXIT_DIVERGED,
            CliError::Core(E::Model(_) | E::Dimension(_) | E::Assembly(_)) => EXIT_INPUT,
            CliError::Core(_) => EXIT_FAILED,
        }
    }
}

pub(crate) fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &std::path::Path, data: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
