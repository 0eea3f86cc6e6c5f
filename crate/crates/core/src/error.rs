//! Crate-wide error type.

/// Errors produced by parsing, fitting, clustering, and transfer orchestration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A structural problem with an input file (bad header, unreadable body).
    /// Per-record problems are collected as [`crate::ingest::Rejection`]s instead.
    #[error("schema: line {line}: field `{field}`: {reason}")]
    Schema {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    #[error("clustering: {0}")]
    Cluster(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("rank-deficient design matrix; unresolvable terms: {terms:?}")]
    RankDeficient { terms: Vec<&'static str> },

    #[error("knowledge base: {0}")]
    Kb(String),

    #[error("transfer backend: {0}")]
    Backend(String),
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
