use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is outside the supported range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("could not allocate a table for N = {requested}")]
    Allocation { requested: u64 },

    #[error("table limits differ: {left} vs {right}")]
    LimitMismatch { left: usize, right: usize },

    #[error("table covers 1..={limit}, but {needed} is required")]
    TableTooSmall { limit: usize, needed: u64 },

    #[error("value overflowed the table entry width at n = {n}")]
    EntryOverflow { n: usize },

    #[error("malformed table cache: {0}")]
    Format(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: f64, limit: f64) -> Self {
        Error::OutOfRange { what, value, limit }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
