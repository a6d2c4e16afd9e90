use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library error classes. Each maps to a distinct process exit code at the
/// CLI boundary (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("domain error in {context}: {message}")]
    Domain { context: &'static str, message: String },

    #[error("series did not converge in {context} within {max_terms} terms")]
    NonConvergence { context: &'static str, max_terms: usize },

    #[error("correlation matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("dimension mismatch in {context}: {message}")]
    Dimension { context: &'static str, message: String },

    #[error("geometry infeasible: {0}")]
    Geometry(String),

    #[error("numerical failure in {context}: {message}")]
    Numerical { context: &'static str, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("drop {drop}, replicate {replicate}: {source}")]
    At { drop: u64, replicate: u64, source: Box<Error> },
}

impl Error {
    /// Stable exit-code mapping: 0 success, 2 usage (clap), 3 parse,
    /// 4 validation, 5 numeric non-convergence, 6 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 3,
            Error::Validation(_) | Error::Domain { .. } | Error::Geometry(_) => 4,
            Error::NonConvergence { .. } => 5,
            Error::NotPsd { .. }
            | Error::Dimension { .. }
            | Error::Numerical { .. }
            | Error::Io(_) => 6,
            Error::At { source, .. } => source.exit_code(),
        }
    }
}
