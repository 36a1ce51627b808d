use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains a non-finite value at node {index}")]
    NonFiniteValue { index: usize },

    #[error("field must be nonnegative, found {value} at node {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("grids of the two fields do not match")]
    GridMismatch,

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("time step {dt} exceeds the stability limit; admissible dt <= {admissible}")]
    UnstableTimeStep { dt: f64, admissible: f64 },

    #[error("solution blew up at t = {t}, step {step}: max u = {max_u}")]
    BlowUp { t: f64, step: u64, max_u: f64 },

    #[error("cutoff annulus under-resolved: {cells} cells across, need at least {required}")]
    UnderResolved { cells: usize, required: usize },

    #[error("trajectory too short: {got} slices, need at least {need}")]
    TooFewSlices { got: usize, need: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
