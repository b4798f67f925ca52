use thiserror::Error;

#[derive(Error, Debug)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("trace schema error: {0}")]
    TraceSchema(String),

    #[error("planner error: {0}")]
    Planner(#[from] bevplan_core::CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
