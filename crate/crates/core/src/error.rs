//! Error type shared by all toolkit modules.

/// Errors raised by catalog construction, simulation, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Catalog size or content-id range is unusable (e.g. an empty catalog).
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    /// A parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A value lies outside the validity region of an approximation.
    #[error("outside approximation validity: {0}")]
    OutOfValidity(String),

    /// A trace event references a content that cannot exist.
    #[error("trace corruption: {0}")]
    TraceCorruption(String),

    /// Factorization rank exceeds the matrix dimensions.
    #[error("invalid rank: {0}")]
    InvalidRank(String),

    /// A numerical procedure diverged or hit a singular system.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A placement violates a cache capacity.
    #[error("infeasible placement: {0}")]
    InfeasiblePlacement(String),

    /// Exhaustive enumeration would exceed the configured guard.
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    /// A delivery schedule cannot be decoded (missing or foreign message).
    #[error("decode failure: {0}")]
    DecodeFailure(String),

    /// A deployment has no base station to associate with.
    #[error("degenerate deployment: {0}")]
    DegenerateDeployment(String),

    /// A trace, matrix, or graph file does not match its declared format.
    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
