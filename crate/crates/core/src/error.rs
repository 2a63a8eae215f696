use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("degenerate cell {cell}: signed area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("time step {level} (t = {time}) failed: {source}")]
    Step {
        level: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("mesh level n = {level} failed: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("power iteration did not reach tolerance after {iterations} iterations")]
    PowerIteration { iterations: usize },

    #[error("zero denominator in relative error")]
    ZeroDenominator,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kinetics '{name}': analytic derivative {which} disagrees with finite differences at ({u}, {v})")]
    KineticsDerivative {
        name: String,
        which: &'static str,
        u: f64,
        v: f64,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
