use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One failed schema check: where in the payload, and what was wrong.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SchemaIssue {
    pub instance_path: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid attribute path: {0}")]
    InvalidPath(String),
    #[error("attribute text must not be empty")]
    EmptyText,
    #[error("name must not be empty")]
    EmptyName,
    #[error("duplicate component name: {0}")]
    DuplicateName(String),
    #[error("malformed document at line {line}, column {column}: {message}")]
    MalformedDocument {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema `{0}` is not registered")]
    UnknownSchema(String),
    #[error("invalid provider request: {0}")]
    InvalidRequest(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("no recorded fixture for request {hash} (looked in {})", path.display())]
    FixtureMissing { hash: String, path: PathBuf },
    #[error("payload for schema `{schema_id}` violates the schema: {}", summarize(.issues))]
    SchemaViolation {
        schema_id: String,
        issues: Vec<SchemaIssue>,
    },
    #[error("provider returned an empty generation")]
    EmptyGeneration,

    #[error("prompt text is empty")]
    EmptyPrompt,
    #[error("state has nothing to generate from")]
    EmptyState,
    #[error("diff is empty")]
    EmptyDiff,
    #[error("artifact has no code")]
    EmptyArtifact,
    #[error("state needs at least two slots, one of them filled, to analyze relations")]
    NothingToAnalyze,
    #[error("edge carries no suggestion")]
    SuggestionMissing,
    #[error("target slot {0} was filled after analysis; re-analyze")]
    SlotOccupied(String),
    #[error("diff conflicts with state at {path}: expected {expected:?}, found {found:?}")]
    DiffConflict {
        path: String,
        expected: Option<String>,
        found: Option<String>,
    },

    #[error("nothing changed since the current version")]
    NoChange,
    #[error("unknown version {0}")]
    UnknownVersion(u64),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("cannot bind {0}")]
    BindFailure(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn summarize(issues: &[SchemaIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{} ({})", i.instance_path, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code, used by the CLI and HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidPath(_) => "INVALID_PATH",
            Error::EmptyText => "EMPTY_TEXT",
            Error::EmptyName => "EMPTY_NAME",
            Error::DuplicateName(_) => "DUPLICATE_NAME",
            Error::MalformedDocument { .. } => "MALFORMED_DOCUMENT",
            Error::UnknownSchema(_) => "UNKNOWN_SCHEMA",
            Error::InvalidRequest(_) => "INVALID_REQUEST",
            Error::ProviderUnavailable(_) => "PROVIDER_UNAVAILABLE",
            Error::FixtureMissing { .. } => "FIXTURE_MISSING",
            Error::SchemaViolation { .. } => "SCHEMA_VIOLATION",
            Error::EmptyGeneration => "EMPTY_GENERATION",
            Error::EmptyPrompt => "EMPTY_PROMPT",
            Error::EmptyState => "EMPTY_STATE",
            Error::EmptyDiff => "EMPTY_DIFF",
            Error::EmptyArtifact => "EMPTY_ARTIFACT",
            Error::NothingToAnalyze => "NOTHING_TO_ANALYZE",
            Error::SuggestionMissing => "SUGGESTION_MISSING",
            Error::SlotOccupied(_) => "SLOT_OCCUPIED",
            Error::DiffConflict { .. } => "DIFF_CONFLICT",
            Error::NoChange => "NO_CHANGE",
            Error::UnknownVersion(_) => "UNKNOWN_VERSION",
            Error::UnknownSession(_) => "UNKNOWN_SESSION",
            Error::BindFailure(_) => "BIND_FAILURE",
            Error::ConfigInvalid(_) => "CONFIG_INVALID",
            Error::Io { .. } => "IO_FAILURE",
        }
    }
}
