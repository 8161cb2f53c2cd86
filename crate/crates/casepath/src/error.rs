use std::path::PathBuf;

/// Failures of the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{origin}: row {row}, column {column}: {message}")]
    Parse { origin: String, row: usize, column: usize, message: String },

    #[error("{origin}: missing column \"{column}\"")]
    MissingColumn { origin: String, column: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] casepath_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::MissingColumn { .. } => "parse",
            Error::Usage(_) => "usage",
            Error::Core(e) => e.category(),
            Error::Verification(_) => "verification",
            Error::Serialize(_) => "io",
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => 2,
            "io" => 3,
            "parse" => 4,
            "input" => 5,
            "singular-elbow" | "divergence" => 6,
            "internal-consistency" | "verification" => 7,
            "oracle-failure" => 8,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialize(e.to_string())
    }
}
