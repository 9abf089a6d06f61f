use thiserror::Error;

/// Error type shared by every solver component.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Mesh topology or geometry violates an invariant.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// A mesh file could not be parsed.
    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    /// Matrix dimensions do not line up for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// LU elimination hit a zero (or numerically vanishing) pivot.
    #[error("singular matrix at elimination stage {stage}")]
    Singular { stage: usize },

    /// A field norm crossed the blow-up guard during a cascade run.
    #[error("solution diverged: {0}")]
    Diverged(String),

    /// Periodic-ODE solver failure (shooting non-convergence, invertibility loss).
    #[error("periodic ODE solver: {0}")]
    Ode(String),

    /// Invalid experiment configuration (bad key, missing file, unit mistake).
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
