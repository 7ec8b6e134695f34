use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("raw walk at level {level} ran out of complete bridges after {available} (needed {needed})")]
    InsufficientBridges {
        level: u32,
        needed: usize,
        available: usize,
    },

    #[error("raw step budget of {cap} exceeded at level {level}")]
    StepBudgetExceeded { level: u32, cap: u64 },

    #[error("{what} is outside the covered horizon")]
    OutOfHorizon { what: String },

    #[error("{value} is not on the lattice {origin} + {step}·Z")]
    OffLattice { value: f64, origin: f64, step: f64 },

    #[error("requested clock {requested} exceeds total quadratic variation {total}")]
    BeyondTotalQv { requested: f64, total: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("metric `{metric}` has a non-positive median at level {level}")]
    NonPositiveMetric { metric: String, level: u32 },

    #[error("table i/o: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn out_of_horizon(what: impl Into<String>) -> Self {
        Error::OutOfHorizon { what: what.into() }
    }
}
