use thiserror::Error;

pub type Result<T> = std::result::Result<T, CmwError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no constraints")]
    NoConstraints,

    #[error("distribution entry {index} is {value:e}, below the clamp threshold")]
    NegativeProbability { index: usize, value: f64 },

    #[error("distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("corner enumeration too large: m = {m} exceeds {max}")]
    CornerEnumerationTooLarge { m: usize, max: usize },

    #[error("use approximate solver: exact LP supports m <= {max}, got m = {m}")]
    UseApproximateSolver { m: usize, max: usize },

    #[error("closed-form solver requires m = 2, got m = {0}")]
    ClosedFormRequiresTwo(usize),

    #[error("direction outside feasible set (max constraint {max_constraint}, sum {sum:e})")]
    InfeasibleDirection { max_constraint: f64, sum: f64 },

    #[error("environment violated constraint: option {index} loss {loss} outside [{lower}, {upper}]")]
    ConstraintViolated {
        index: usize,
        loss: f64,
        lower: f64,
        upper: f64,
    },

    #[error("linear program is infeasible (phase-one residual {residual:e})")]
    LpInfeasible { residual: f64 },

    #[error("linear program is unbounded (entering column {column})")]
    LpUnbounded { column: usize },

    #[error("linear program numerically singular: {0}")]
    LpSingular(String),

    #[error("simplex iteration limit {0} reached")]
    LpIterationLimit(usize),

    #[error("active-set QP did not converge in {iterations} iterations (step norm {step_norm:e}, working set {working_set:?})")]
    QpNotConverged {
        iterations: usize,
        step_norm: f64,
        working_set: Vec<usize>,
    },

    #[error("runtime invariant violated: {0}")]
    InvariantViolated(String),
}
