use thiserror::Error;

/// Errors raised by model construction, simulation and the analytic bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("occupation tuple has {got} entries but the bath has {expected} modes")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "bath band straddles or touches the 1-3 Bohr frequency {bohr}: every mode frequency must \
         lie strictly above it or strictly below it (the band must not intersect the Bohr frequency)"
    )]
    BandStraddle { bohr: f64 },

    #[error("mode {mode} has zero coupling; threshold bounds need every |g_k| > 0")]
    ZeroCoupling { mode: usize },

    #[error("eigensolver did not converge within {sweeps} sweeps for block {tuple:?}")]
    ConvergenceFailure { tuple: Vec<u32>, sweeps: usize },

    #[error("temperature must be nonnegative and finite, got {0}")]
    NonpositiveTemperature(f64),

    #[error("truncation needs {block_count} blocks, above the budget of {budget}")]
    PlanTooLarge { block_count: u128, budget: u64 },

    #[error("chi = {0} is outside (1/2, 1]")]
    ChiOutOfRange(f64),

    #[error("coupling norm c = {c} is not admissible: need c^2 > {required_sq}")]
    InadmissibleC { c: f64, required_sq: f64 },

    #[error("epsilon = {0} is outside (0, 1)")]
    EpsOutOfRange(f64),

    #[error("exact enumeration needs more than {budget} tuples")]
    BudgetExceeded { budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
