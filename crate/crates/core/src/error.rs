use std::path::PathBuf;

/// Errors raised anywhere in model construction or file handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad column spec `{text}`: {reason}")]
    ColumnSpec { text: String, reason: String },

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Gram matrix is not positive definite; regularize the basis first")]
    NotPositiveDefinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "cannot build a {requested}-point Gaussian quadrature: the measure has only {support} \
         distinct support points with positive mass (nodes closer than 1e-12 relative are merged)"
    )]
    SupportTooSmall { requested: usize, support: usize },

    #[error("{count} product attributes exceed the cap of {cap}")]
    TooManyProducts { count: usize, cap: usize },

    #[error("product expansion needs a constant column in the input basis")]
    NoConstantColumn,

    #[error("count overflow for n={n}, degree={degree}")]
    Overflow { n: usize, degree: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
