use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("causal graph has a cycle through variable `{variable}`")]
    CycleDetected { variable: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value {value} is outside the domain of `{variable}`")]
    ValueOutsideDomain { variable: String, value: String },

    #[error("variable `{0}` appears more than once")]
    DuplicateVariable(String),

    #[error("equation for `{variable}` is ill-typed: {reason}")]
    TypeMismatch { variable: String, reason: String },

    #[error("target does not hold in the actual context")]
    TargetNotActual,

    #[error("AC3 enumeration needs {settings} settings, budget is {budget}")]
    CandidateTooLarge { settings: u128, budget: u128 },

    #[error("instance needs {size} interventions, budget is {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("cause of size {size} is too large for sub-instance expansion (limit {limit})")]
    CauseTooLargeForExpansion { size: usize, limit: usize },

    #[error("set-valued domains need 2^{k} values, limit is k <= {limit}")]
    KTooLargeForSetDomains { k: usize, limit: usize },

    #[error("only found {found} of {requested} contexts after {attempts} attempts")]
    SamplingExhausted {
        found: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("context is inconsistent: {0}")]
    ContextInconsistent(String),

    #[error("heuristic `{0}` needs post-intervention values the oracle does not expose")]
    IncompatibleHeuristic(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("oracle failed on intervention {intervention}: {message}")]
    Oracle {
        intervention: String,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Budget-style failures get their own exit status in the CLI and FFI.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::CandidateTooLarge { .. }
                | Error::BudgetExceeded { .. }
                | Error::CauseTooLargeForExpansion { .. }
                | Error::KTooLargeForSetDomains { .. }
                | Error::SamplingExhausted { .. }
        )
    }
}
