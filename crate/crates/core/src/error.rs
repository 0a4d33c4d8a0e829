use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One failed validation rule in an experiment config, addressed by a
/// dotted field path such as `algorithms[2].schedule.c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("block {block} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { block: usize, asymmetry: f64 },

    #[error("block {block} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { block: usize, min_eigenvalue: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("stepsize gamma = {gamma} outside the admissible interval ({lower}, {upper})")]
    InadmissibleStepsize { gamma: f64, lower: f64, upper: f64 },

    #[error("{algorithm}: solver memory is missing or belongs to another method")]
    MissingMemory { algorithm: &'static str },

    #[error("{algorithm} requires {what}")]
    Unsupported { algorithm: &'static str, what: &'static str },

    #[error("every sampled point pair was degenerate")]
    DegeneratePairs,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid config:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("no metrics selected")]
    NoMetrics,

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}
