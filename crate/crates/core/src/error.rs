use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse distribution spec {spec:?}: {reason}")]
    DistSpec { spec: String, reason: String },

    /// Two distinct optimal paths were found within the tie tolerance.
    #[error("geodesic is not unique: tie of {gap:e} at vertex {vertex}")]
    GeodesicTie { vertex: usize, gap: f64 },

    #[error("not checkable by sufficient conditions: {0}")]
    NotCheckable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
