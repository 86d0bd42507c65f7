//! Error-to-exit-code mapping. Validation problems (bad config, inconsistent
//! parameters, inadequate truncations requested by the user) exit with 2;
//! numerical non-convergence (integrator drift, failed convergence doubling,
//! dense-solver failures) exits with 3.

use cmjc_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerics(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerics(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerics(m) => m,
        }
    }

}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::NonConverged(_) | CoreError::Linalg(_) => {
                CliError::Numerics(err.to_string())
            }
            _ => CliError::Validation(err.to_string()),
        }
    }
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
