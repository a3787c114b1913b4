use thiserror::Error;

/// Harness failures, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("infeasible certificate: {0}")]
    Infeasible(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::BlowUp(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<gencoupling::coupling::CouplingError> for CliError {
    fn from(e: gencoupling::coupling::CouplingError) -> Self {
        use gencoupling::coupling::CouplingError as E;
        match e {
            E::BlowUp { .. } => CliError::BlowUp(e.to_string()),
            other => CliError::config(other.to_string()),
        }
    }
}
