use thiserror::Error;

use crate::parser::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative concentration {value} for species {index}")]
    NegativeConcentration { index: usize, value: f64 },

    #[error("concentration of species {index} must be strictly positive, got {value}")]
    NonpositiveConcentration { index: usize, value: f64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("network is not complex balanced (residual {residual:e})")]
    NotComplexBalanced { residual: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("conservation mass must be strictly positive, got {mass:?}")]
    NonpositiveMass { mass: Vec<f64> },

    #[error("Newton projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("state is not a complex balanced equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },

    #[error("kernel of the conservation matrix is trivial")]
    DegenerateKernel,

    #[error("reaction gap {beta:e} is not positive")]
    NonpositiveGap { beta: f64 },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("grid needs at least 8 cells per axis, got {cells}")]
    GridTooCoarse { cells: usize },

    #[error("non-finite state at t = {t} (species {species}, cell {cell})")]
    NonFiniteState { t: f64, species: usize, cell: usize },

    #[error("negative state at t = {t} with clamping disabled (species {species}, cell {cell})")]
    NegativeState { t: f64, species: usize, cell: usize },

    #[error("fit window holds {rows} rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },

    #[error("series value {value} at t = {t} is not positive")]
    NonpositiveSeries { t: f64, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error, skipping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
