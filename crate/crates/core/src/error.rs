use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no grid point has a Mandelbrot count in [{lo}, {hi}]; refine or move the scan grid")]
    EmptyCatalogue { lo: u32, hi: u32 },

    #[error("value {value} at flat index {index} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("plan built for {plan}x{plan} images cannot handle {actual}x{actual}")]
    PlanMismatch { plan: usize, actual: usize },

    #[error("direct DFT is restricted to images of at most {max}x{max} pixels (got {h}x{w})")]
    SizeGuard { max: usize, h: usize, w: usize },

    #[error("temporal operators need at least two frames")]
    SingleFrame,

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("noise region has zero standard deviation")]
    ZeroNoise,

    #[error("edge fit failed: {0}")]
    FitFailure(String),

    #[error("only {fitted} frame(s) produced a valid edge fit, at least 2 are required")]
    TooFewFits { fitted: usize },

    #[error("bad magic bytes in array container")]
    BadMagic,

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),

    #[error("bad shape {0:?}")]
    BadShape(Vec<usize>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            err: source,
        }
    }
}
