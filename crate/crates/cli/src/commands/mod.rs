pub mod check;
pub mod generate;
pub mod report;
pub mod run;
pub mod score_cmd;
pub mod solve;

use std::fmt;

use reoptbench::harness::HarnessError;
use reoptbench::mps::MpsError;
use reoptbench::oracle::OracleError;
use reoptbench::score::ScoreError;
use reoptbench::simgen::GenError;

/// Failures mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: bad invocation (flag combinations, unparsable arguments).
    Usage(String),
    /// Exit 2: recipe, protocol or scoring errors.
    Domain(String),
    /// Exit 3: filesystem and process failures.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Io { .. } => CliError::Io(e.to_string()),
            GenError::Mps(MpsError::Io { .. }) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<MpsError> for CliError {
    fn from(e: MpsError) -> Self {
        match e {
            MpsError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Spawn { .. } | HarnessError::Io { .. } | HarnessError::MissingInstance { .. } => {
                CliError::Io(e.to_string())
            }
            HarnessError::Manifest(inner) => CliError::from(inner),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub fn io_error(context: &str, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}
