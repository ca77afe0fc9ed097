use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("complexity undefined: {0}")]
    DegenerateInput(String),

    #[error("unknown {kind}: {id}")]
    Lookup { kind: &'static str, id: String },

    #[error("projection failed in {technique} at iteration {iteration}: {message}")]
    Projection {
        technique: String,
        iteration: usize,
        message: String,
    },

    #[error("external technique {technique} failed: {message}")]
    ExternalTechnique {
        technique: String,
        exit_code: Option<i32>,
        message: String,
    },

    #[error("objective failed on all {trials} trials; last error: {last}")]
    Objective { trials: usize, last: String },

    #[error("pretraining failed: {0}")]
    Pretrain(String),

    #[error("workflow failed: {0}")]
    Workflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Validation(_) | Error::DegenerateInput(_) | Error::Lookup { .. }
        )
    }
}
