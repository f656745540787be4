use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("could not construct a valid instance after {attempts} attempts")]
    ConstructionFailure { attempts: usize },

    #[error("weighted features do not span R^{dim} (sweep step {step} found no direction)")]
    RankDeficiency { dim: usize, step: usize },

    #[error("design matrix is singular")]
    SingularDesign,

    #[error("Frank-Wolfe did not converge in {iterations} iterations (delta = {delta:.3e})")]
    NotConverged { iterations: usize, delta: f64 },

    #[error("degenerate instance: ||v*||_inf = {0:.3e}")]
    DegenerateInstance(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unknown algorithm kind `{0}`")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
