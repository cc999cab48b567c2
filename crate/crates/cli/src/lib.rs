//! Batch driver: read points from CSV, run one of the fair k-median
//! pipelines and write a JSON result document.

pub mod ingest;
pub mod policy_spec;
pub mod report;
pub mod run;

use fairmed_core::Error as CoreError;

pub use ingest::{load_instance, Ingested};
pub use policy_spec::parse_policy;
pub use report::Report;
pub use run::{run, PipelineKind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Input(_) | CliError::Internal(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible(m) => CliError::Infeasible(m),
            CoreError::Invariant(_) | CoreError::FlowConservation { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
