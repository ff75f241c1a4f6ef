use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown operator tag `{0}`")]
    UnknownOperator(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{aborted} of {total} trajectories aborted, above the {budget} budget")]
    AbortBudget {
        aborted: usize,
        total: usize,
        budget: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("sensitivity undefined: {0}")]
    DivergentSensitivity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
