use planarstat::exactsol::ExactError;
use planarstat::fitting::FitError;
use planarstat::lattice::LatticeError;
use planarstat::montecarlo::McError;
use planarstat::pfaffian::PfaffianError;
use planarstat::rgflow::FlowError;
use planarstat::stats::StatsError;
use std::path::Path;
use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::InvalidConfig(_) | McError::WrongModel(_) | McError::SeparationTooLarge { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::DegenerateWindow(..) | FitError::TooFewPoints { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<PfaffianError> for CliError {
    fn from(e: PfaffianError) -> Self {
        match e {
            PfaffianError::InvalidWeights(_) | PfaffianError::SeparationTooLarge { .. } | PfaffianError::Lattice(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::NonPositiveCoupling(_) | ExactError::OutOfDomain(_) | ExactError::Inconsistent(_) => {
                CliError::Config(e.to_string())
            }
            ExactError::Singular(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::NotConverged(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
