use thiserror::Error;

/// Errors raised by the analytic and simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("correlation matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: successive refinements differ by {diff:e}")]
    QuadratureNonConvergence { diff: f64 },

    #[error("copula/marginal pair is infeasible{}: second difference {value:e} at ({from}, {to})",
        step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    InfeasibleCopula {
        step: Option<usize>,
        from: usize,
        to: usize,
        value: f64,
    },

    #[error("state {0} has zero probability mass")]
    ZeroMassState(usize),

    #[error("transition matrix is not ergodic (irreducible and aperiodic)")]
    NonErgodic,

    #[error("kernel matrix is not irreducible")]
    NonIrreducible,

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("spatial copula family {0} is not supported for exact composition")]
    UnsupportedSpatialCopula(String),

    #[error("negative transform requires a radially symmetric copula (asymmetry {0:e})")]
    AsymmetricCopula(f64),

    #[error("queue is unstable: mean capacity {mean_capacity} <= arrival rate {lambda}")]
    UnstableQueue { mean_capacity: f64, lambda: f64 },

    #[error("no adjustment coefficient: no cycle of the chain averages a capacity below the arrival rate")]
    NoRoot,

    #[error("violation probability {epsilon} is unreachable at any positive rate")]
    NoFeasibleRate { epsilon: f64 },

    #[error("enumeration too large: {count} > {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("models have different marginal increment laws (means {mean_a} vs {mean_b})")]
    MarginalMismatch { mean_a: f64, mean_b: f64 },

    #[error("operation requires a time-homogeneous model")]
    InhomogeneousModel,

    #[error("empty sample set")]
    EmptySamples,
}

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Infeasible,
    Unstable,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InfeasibleCopula { .. } | ZeroMassState(_) => ErrorClass::Infeasible,
            UnstableQueue { .. } | NoRoot | NoFeasibleRate { .. } => ErrorClass::Unstable,
            QuadratureNonConvergence { .. } | NonConvergence { .. } | NonIrreducible | NonErgodic => {
                ErrorClass::Numeric
            }
            DimensionMismatch { .. }
            | NotPositiveSemiDefinite
            | InvalidParameter(_)
            | UnsupportedSpatialCopula(_)
            | AsymmetricCopula(_)
            | EnumerationTooLarge { .. }
            | MarginalMismatch { .. }
            | InhomogeneousModel
            | EmptySamples => ErrorClass::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
