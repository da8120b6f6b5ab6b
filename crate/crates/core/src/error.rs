use thiserror::Error;

use crate::flow::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has a non-finite coordinate")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the declared domain")]
    OutsideDomain,

    #[error("prox solver did not converge after {iterations} iterations (residual {residual:e})")]
    ProxNonConvergence { iterations: usize, residual: f64 },

    /// The Moreau–Yosida refinement kept moving; the point is likely outside
    /// `dom ∂f` and the slope there is possibly `+∞`.
    #[error("minimal-norm subgradient did not converge (slope possibly +inf); last change {last_change:e}")]
    SubgradNonConvergence { last_change: f64 },

    #[error("flow aborted at step {step}: {source}")]
    FlowAborted {
        step: usize,
        partial: Box<Trajectory>,
        #[source]
        source: Box<Error>,
    },

    #[error("flow bounded: secants at infinity undefined (escape distance {distance:.3e} <= radius {radius})")]
    FlowBounded { distance: f64, radius: f64 },

    #[error("schedule overflow at n={n}: t_n would exceed the time budget {budget:e}")]
    ScheduleOverflow { n: usize, budget: f64 },

    #[error("inversion out of range: {value} not in [{lo}, {hi}]")]
    InversionOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
