use std::fmt;
use std::path::PathBuf;

/// One problem found while validating a configuration, located by field path
/// (e.g. `arms[2].threshold`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] gqhuber_core::Error),
    #[error("{0}")]
    Format(String),
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: &str, err: &serde_json::Error) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// True for problems in the user's input rather than in the run.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
