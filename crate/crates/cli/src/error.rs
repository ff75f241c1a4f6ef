use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] nematic_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use nematic_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Config(_) | E::UnknownOperator(_)) => {
                EXIT_CONFIG
            }
            CliError::Core(E::AbortBudget { .. }) => EXIT_BUDGET,
            CliError::Output { .. } | CliError::Core(_) => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
