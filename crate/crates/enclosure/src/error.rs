use std::path::PathBuf;

use enclosure_core::Error as CoreError;

/// Failures of the experiment driver, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("mesh not found: {}", .0.display())]
    MeshNotFound(PathBuf),

    #[error("invalid mesh file {}: line {line}: {reason}", path.display())]
    MeshFormat { path: PathBuf, line: usize, reason: String },

    #[error("{0}")]
    Numerical(#[from] CoreError),

    #[error("mesh invariants violated: {0}")]
    InvalidMesh(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MeshNotFound(_) | CliError::MeshFormat { .. } => 2,
            CliError::Numerical(_) | CliError::InvalidMesh(_) | CliError::Io { .. } => 3,
            CliError::Verification(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Geometry and precondition failures found while loading a config are
/// configuration errors, not numerical ones.
pub(crate) fn config_error(e: CoreError) -> CliError {
    match e {
        CoreError::Disjointness(..) | CoreError::Clearance { .. } | CoreError::DegeneratePolygon(_) | CoreError::InvalidInput(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Numerical(other),
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
