use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a git repository: {0}")]
    RepoNotFound(PathBuf),

    #[error("branch or revision not found: {0}")]
    BranchNotFound(String),

    #[error("git command failed: {0}")]
    Git(String),

    #[error("object {0} missing from the repository")]
    MissingObject(String),

    #[error("developer identity has neither a name nor an email")]
    EmptyIdentity,

    #[error("annotation mismatch in {context}: {annotations} annotations for {lines} lines")]
    AnnotationMismatch {
        context: String,
        annotations: usize,
        lines: usize,
    },

    #[error("file {0} has no positive DOA value")]
    DegenerateFile(String),

    #[error("file {0} has no commits")]
    EmptyHistory(String),

    #[error("developer {0} has no change event in range")]
    NeverActive(String),

    #[error("file {0} never contained variable code")]
    NoVariableCode(String),

    #[error("no eligible files: {0}")]
    NoEligibleFiles(String),

    #[error("no analysis found at {0}; run `varexp analyze` first")]
    MissingAnalysis(PathBuf),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for invalid input or
    /// configuration, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RepoNotFound(_)
            | Error::BranchNotFound(_)
            | Error::EmptyIdentity
            | Error::NoEligibleFiles(_)
            | Error::MissingAnalysis(_)
            | Error::InvalidConfig(_) => 2,
            _ => 1,
        }
    }
}
