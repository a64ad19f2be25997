use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error(
        "simulation budget exhausted after {draws} population draws \
         ({cases} of {n_cases} cases, {controls} of {n_controls} controls); \
         the baseline intercept is probably too extreme for the requested pool sizes"
    )]
    SimulationBudget {
        draws: u64,
        cases: usize,
        n_cases: usize,
        controls: usize,
        n_controls: usize,
    },

    #[error("outcome has a single class ({cases} cases out of {n} observations)")]
    DegenerateOutcome { cases: f64, n: f64 },

    #[error("fit does not support this operation: {0}")]
    UnsupportedFit(String),

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("subset enumeration needs {needed} candidates, budget is {budget}")]
    EnumerationBudget { needed: u128, budget: u128 },

    #[error("rate undefined: {0}")]
    UndefinedRate(String),

    #[error("information matrix is not positive definite")]
    Singular,
}
