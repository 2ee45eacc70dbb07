use thiserror::Error;

/// Crate-wide error type.
///
/// The variants mirror the failure modes of the numerical layers: domain
/// violations on scalar inputs, structural input errors (bad grids, mismatched
/// batches), model-contract violations detected mid-simulation, and quadrature
/// failures that carry whatever partial result was computed.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("model contract violation at coordinate {coord}: {detail} (state {state:?})")]
    ModelContract {
        coord: usize,
        state: Vec<f64>,
        detail: String,
    },

    #[error("numerical failure: {context} (partial result {partial:?}, estimated error {est_error:?})")]
    Numerical {
        context: String,
        partial: Option<f64>,
        est_error: Option<f64>,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
