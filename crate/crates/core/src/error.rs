use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lacunary ratio must exceed 1, got {0}")]
    InvalidRatio(f64),

    #[error("lacunary family must contain at least one term")]
    EmptyFamily,

    #[error("lacunary family overflows the index type after {0} terms")]
    FamilyOverflow(usize),

    #[error("invalid lacunary family: {0}")]
    InvalidFamily(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid index space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("aliasing on axis {axis}: bandwidth {bandwidth} needs more than {resolution}/2 grid points")]
    Aliasing {
        axis: usize,
        bandwidth: usize,
        resolution: usize,
    },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("expected {expected} free axes, found {found}")]
    WrongFreeAxisCount { expected: usize, found: usize },

    #[error("axis {0} is not a free axis of the sample")]
    AxisNotFree(usize),

    #[error("difference of order {order} at j = {index} runs past the stored range of {len} values")]
    RangeOverflow { index: usize, order: usize, len: usize },

    #[error("index component {value} on coordinate {coordinate} is below the required minimum {minimum}")]
    IndexTooSmall {
        coordinate: usize,
        value: usize,
        minimum: usize,
    },

    #[error("index {index:?} lies outside the range {shape:?}")]
    IndexOutOfRange { index: Vec<usize>, shape: Vec<usize> },

    #[error("second difference vanishes at coordinate {coordinate} (j = {index}); regime 2 is undefined")]
    DegenerateWeight { coordinate: usize, index: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
