use thiserror::Error;

/// Crate-wide error type.
///
/// Variants split into two families that the CLI maps onto exit codes:
/// parameter/domain problems (exit 1) and numeric/accuracy failures (exit 2).
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter or input was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A density or operator was evaluated at (or too close to) the simplex
    /// boundary where it is singular.
    #[error("boundary singularity: {0}")]
    Singularity(String),

    /// Requested accuracy was not reached; carries the best estimate found.
    #[error("accuracy failure: {message} (best estimate {best_estimate:e}, error bound {error_bound:e})")]
    Accuracy {
        message: String,
        best_estimate: f64,
        error_bound: f64,
    },

    /// Finite-element assembly failed on a specific mesh cell.
    #[error("assembly failure on cell {cell}: {message}")]
    Assembly { cell: usize, message: String },

    /// Dense eigensolver failed to converge or produced invalid output.
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    /// An asymptotic formula was evaluated outside its valid regime.
    #[error("outside valid regime: {0}")]
    Regime(String),

    /// A multi-start search found no feasible point.
    #[error("search failure: {0}")]
    SearchFailure(String),

    /// Filesystem problem while writing experiment outputs.
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for domain/validation errors,
    /// 2 for numeric/accuracy failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Singularity(_)
            | Error::Regime(_)
            | Error::Io(_) => 1,
            Error::Accuracy { .. }
            | Error::Assembly { .. }
            | Error::Eigensolver(_)
            | Error::SearchFailure(_) => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
