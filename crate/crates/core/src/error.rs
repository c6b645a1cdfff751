use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {n} out of range 1..={max}")]
    QubitCount { n: usize, max: usize },

    #[error("coupling vector: {0}")]
    Couplings(String),

    #[error("operator: {0}")]
    Operator(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("reduced time {0} outside [0, 1]")]
    ReducedTime(f64),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepUnderflow { s: f64, h: f64 },

    #[error("norm drift {drift:e} exceeds ceiling {ceiling:e}")]
    NormDrift { drift: f64, ceiling: f64 },

    #[error("s = {s} outside integration span [{start}, {end}]")]
    OutsideSpan { s: f64, start: f64, end: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid index {index} outside lattice of {size} points")]
    GridIndex { index: u64, size: u64 },

    #[error("config line {line}: key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("plot: {0}")]
    Plot(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
