use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

use crate::series::MultiIndex;

pub type Result<T, E = PmorError> = std::result::Result<T, E>;

/// A shift that hit the pencil spectrum during validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    /// Zero-based interpolation index.
    pub index: usize,
    pub side: Side,
    pub param: Vec<f64>,
    pub shift: Complex64,
    pub rcond: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Right => f.write_str("right"),
            Side::Left => f.write_str("left"),
        }
    }
}

#[derive(Debug, Error)]
pub enum PmorError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("pencil sE - A is numerically singular at s = {shift} (rcond = {rcond:.3e})")]
    SingularPencil { shift: Complex64, rcond: f64 },

    #[error("reduced E matrix is numerically singular (rcond = {rcond:.3e})")]
    SingularReducedE { rcond: f64 },

    #[error("{} interpolation shift(s) collide with the pencil spectrum", collisions.len())]
    SpectrumCollision { collisions: Vec<Collision> },

    #[error("interpolation residual {worst:.3e} exceeds the limit {limit:.3e}")]
    ResidualTooLarge { worst: f64, limit: f64 },

    #[error("duplicate multi-index {0}")]
    DuplicateTerm(MultiIndex),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PmorError {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        PmorError::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PmorError::InvalidInput(msg.into())
    }

    /// True for failures caused by the numerics rather than the inputs' syntax.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PmorError::SingularPencil { .. }
                | PmorError::SingularReducedE { .. }
                | PmorError::SpectrumCollision { .. }
                | PmorError::ResidualTooLarge { .. }
        )
    }
}

/// Structured parse failure: where it happened and what was expected.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{}:{line}: expected {expected}, found {found}", file.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
pub struct ParseError {
    pub file: Option<PathBuf>,
    /// One-based line number; 0 when the error concerns the whole file.
    pub line: usize,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub fn new(line: usize, expected: impl Into<String>, found: impl Into<String>) -> Self {
        ParseError {
            file: None,
            line,
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub fn in_file(mut self, path: impl Into<PathBuf>) -> Self {
        self.file = Some(path.into());
        self
    }
}
