use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = RarError> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into three classes that the CLI maps onto exit codes:
/// validation (bad input), numerical (the data are valid but a computation
/// degenerates) and I/O.
#[derive(Debug, Error)]
pub enum RarError {
    #[error("{0}")]
    Validation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("singular design: column `{column}` is linearly dependent on the preceding columns")]
    SingularDesign { column: String },

    #[error("degenerate leverage at unit `{unit}` (h = {leverage}); the unit determines its own fit")]
    DegenerateLeverage { unit: String, leverage: f64 },

    #[error("all deviations are identical; similarity kernel has zero bandwidth")]
    DegenerateSimilarity,

    #[error("region {region} has zero volume")]
    DegeneratePartition { region: usize },

    #[error("input is constant: {0}")]
    ConstantInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for exit codes and machine-readable error tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl RarError {
    pub fn validation(msg: impl Into<String>) -> Self {
        RarError::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RarError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            RarError::Validation(_) | RarError::Parse { .. } => ErrorClass::Validation,
            RarError::Io { .. } => ErrorClass::Io,
            RarError::SingularDesign { .. }
            | RarError::DegenerateLeverage { .. }
            | RarError::DegenerateSimilarity
            | RarError::DegeneratePartition { .. }
            | RarError::ConstantInput(_)
            | RarError::Numerical(_) => ErrorClass::Numerical,
        }
    }

    /// Short stable tag, e.g. `singular-design`.
    pub fn code(&self) -> &'static str {
        match self {
            RarError::Validation(_) => "validation",
            RarError::Parse { .. } => "parse",
            RarError::SingularDesign { .. } => "singular-design",
            RarError::DegenerateLeverage { .. } => "degenerate-leverage",
            RarError::DegenerateSimilarity => "degenerate-similarity",
            RarError::DegeneratePartition { .. } => "degenerate-partition",
            RarError::ConstantInput(_) => "constant-input",
            RarError::Numerical(_) => "numerical",
            RarError::Io { .. } => "io",
        }
    }

    /// Process exit code: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 1,
            ErrorClass::Numerical => 2,
            ErrorClass::Io => 3,
        }
    }
}
