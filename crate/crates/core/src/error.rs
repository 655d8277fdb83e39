//! Error type shared across the audit pipeline.

use std::path::PathBuf;

/// Errors produced by corpus loading, scoring, generation, and reporting.
///
/// Variants are grouped by failure domain so that callers (notably the CLI)
/// can map them onto distinct exit codes without string matching.
#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    /// Invalid configuration: bad scorer spec, out-of-range parameter, etc.
    /// Reported before any network activity.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent corpus input. Messages carry the source
    /// line or record index where applicable.
    #[error("corpus error: {0}")]
    Corpus(String),

    /// Remote endpoint failure: transport errors after retries, non-parsable
    /// replies, refused generations, invalid embedding payloads.
    #[error("endpoint error: {0}")]
    Endpoint(String),

    /// Violated precondition in the analysis layer (dimension mismatch,
    /// non-finite similarity, empty input, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Filesystem failure outside corpus parsing (cache and report I/O).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AuditError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;
