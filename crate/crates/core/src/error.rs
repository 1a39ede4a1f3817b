use thiserror::Error;

use crate::netgraph::NodeIx;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown node index {0}")]
    UnknownNode(NodeIx),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum ChoiceError {
    #[error("non-finite decision attribute `{0}`")]
    NonFinite(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("state error: {0}")]
    State(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("event scheduled in the past: at {at_ms} ms while clock is {now_ms} ms")]
    PastEvent { at_ms: u64, now_ms: u64 },
    #[error("state error: {0}")]
    State(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("sweep cell (share {share}, replication {replication}) failed: {source}")]
    Cell {
        share: f64,
        replication: usize,
        #[source]
        source: Box<ScenarioError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("input error: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
}
