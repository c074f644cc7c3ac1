use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("t = {t} lies outside the domain [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error(
        "degenerate cross-section at t = {t}: {skipped} of {total} projection directions have zero spread"
    )]
    DegenerateCrossSection { t: f64, skipped: usize, total: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("coordinate {coordinate}: {source}")]
    Coordinate {
        coordinate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_coordinate(self, coordinate: usize) -> Self {
        Error::Coordinate {
            coordinate,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the `mprof` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Input(_)
            | Error::Domain { .. }
            | Error::BasisMismatch(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::RankDeficient(_)
            | Error::DegenerateScale(_)
            | Error::DegenerateCrossSection { .. } => 4,
            Error::Invariant(_) => 5,
            Error::Coordinate { source, .. } => source.exit_code(),
        }
    }
}
