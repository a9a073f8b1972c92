//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]; the CLI maps
//! [`Error::category`] to an exit code so scripts can branch on failure
//! class without parsing messages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Contact footprint reaches the sensor border, so the observation
    /// would miss part of the cross-section.
    #[error("sensing area exceeded: {0}")]
    SensingArea(String),

    /// An operation that requires points received none.
    #[error("empty point cloud in {stage}")]
    EmptyCloud { stage: &'static str },

    /// Height filtering removed every point.
    #[error("contact lost: no points above z threshold {z_th} mm")]
    ContactLoss { z_th: f64 },

    /// DBSCAN labelled every point as noise.
    #[error("unusable observation: clustering found no clusters")]
    NoClusters,

    /// The rigid least-squares fit has no unique solution.
    #[error("degenerate correspondence set: {0}")]
    DegenerateSolve(String),

    /// Every initialization of the registration sweep failed.
    #[error("all registration candidates failed: {}", format_candidate_failures(.0))]
    AllCandidatesFailed(Vec<(f64, String)>),

    /// The Poisson solver could not reach the requested residual.
    #[error("poisson solver did not converge: residual {residual:.3e}")]
    SolverDiverged { residual: f64 },

    #[error("grid dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    /// Wraps an error with the pipeline stage it occurred in.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a pipeline stage label to an error.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stable machine-readable category, also used as the CLI exit class.
    pub fn category(&self) -> &'static str {
        match self {
            Error::SensingArea(_) => "sensing_area",
            Error::EmptyCloud { .. } | Error::ContactLoss { .. } | Error::NoClusters => "pipeline",
            Error::DegenerateSolve(_) | Error::AllCandidatesFailed(_) => "registration",
            Error::SolverDiverged { .. } => "solver",
            Error::DimensionMismatch { .. } | Error::GridFormat(_) => "format",
            Error::InvalidShape(_) | Error::Config(_) => "config",
            Error::Stage { source, .. } => source.category(),
            Error::Io(_) => "io",
        }
    }
}

fn format_candidate_failures(failures: &[(f64, String)]) -> String {
    failures
        .iter()
        .map(|(alpha, msg)| format!("alpha={alpha:.0}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
