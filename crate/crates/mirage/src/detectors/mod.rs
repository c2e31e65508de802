//! The four detector families: embedding cosine, LLM-prompted similarity,
//! NLI entailment, and commentator/judge ensembles.
//!
//! Every detector ends in the same place: a [`crate::scores::DetectorVerdict`]
//! per data point, so evaluation and reporting never care which family
//! produced a verdict.

pub mod judge;
pub mod nli;
pub mod similarity;

use thiserror::Error;

use crate::backends::BackendError;
use crate::scores::ScoreError;

#[derive(Debug, Error)]
pub enum DetectorError {
    /// A backend call failed hard while scoring the named point.
    #[error("point {point_id}: {source}")]
    Backend {
        point_id: String,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Score(#[from] ScoreError),
    /// Vector shapes unusable for cosine similarity.
    #[error("embedding geometry: {0}")]
    Geometry(String),
    /// Opinion aggregation preconditions violated.
    #[error("opinion aggregation: {0}")]
    Aggregation(String),
    /// A judge composition is missing a backend for a required role.
    #[error("no backend configured for role {role:?}")]
    MissingRole { role: String },
}

impl DetectorError {
    /// Whether this wraps a hard backend failure (drives the CLI's exit code 2).
    pub fn is_backend(&self) -> bool {
        matches!(self, Self::Backend { .. })
    }
}
