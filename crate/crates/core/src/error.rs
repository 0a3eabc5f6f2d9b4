use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    Shape {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no data rows")]
    Empty,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("segment {segment} has {length} rows, at least {required} needed")]
    ShortSegment {
        segment: usize,
        length: usize,
        required: usize,
    },
    #[error("series too short: {length} points, at least {required} needed")]
    ShortSeries { length: usize, required: usize },
    #[error("singular design matrix: {0}")]
    Singular(&'static str),
    #[error("covariance block is rank deficient")]
    Rank,
    #[error("labels contain a single class")]
    OneClass,
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("simulation left (0,1) after {restarts} restarts")]
    Unstable { restarts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed model blob: {0}")]
    Blob(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err<T>(
    context: &'static str,
    expected: (usize, usize),
    found: (usize, usize),
) -> Result<T> {
    Err(Error::Shape {
        context,
        expected,
        found,
    })
}
