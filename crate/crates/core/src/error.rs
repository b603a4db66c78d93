use std::io;

/// Errors raised by the solvers, the simulator and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(
        "boundary outside domain: no bracket found for the free-boundary equation below x = {0}"
    )]
    BoundaryOutsideDomain(f64),

    #[error("y = {y} is below the boundary floor g(0) = {floor}")]
    BelowFloor { y: f64, floor: f64 },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the `exstop` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::GridMismatch(_) | Error::Json(_) => 2,
            Error::Assumption(_) => 3,
            Error::Iteration { source, .. } => source.exit_code(),
            Error::Domain(_)
            | Error::BoundaryOutsideDomain(_)
            | Error::BelowFloor { .. }
            | Error::Numerical(_) => 4,
            Error::Io(_) | Error::Csv(_) => 2,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
