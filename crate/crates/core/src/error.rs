use thiserror::Error;

use crate::scenario::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty class list")]
    EmptyClassList,

    #[error("{0}")]
    Divisibility(String),

    #[error("missing classes: {0:?}")]
    MissingClasses(Vec<ClassId>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("model has not been trained on any data")]
    NotFitted,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("non-finite loss at step {step} (learning rate {learning_rate})")]
    NonFiniteLoss { step: usize, learning_rate: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("underdetermined design: n = {n} observations, p = {p} parameters")]
    Underdetermined { n: usize, p: usize },

    #[error("rank-deficient design; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("response `{0}` has zero variance")]
    ConstantResponse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("analysis infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
