use std::path::PathBuf;

use ridesim_core::{ChoiceError, GraphError, MetricsError, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration. `location` is `file:line` when known.
    #[error("{}{}{message}", location.as_deref().map(|l| format!("{l}: ")).unwrap_or_default(), key.as_deref().map(|k| format!("`{k}`: ")).unwrap_or_default())]
    Config { location: Option<String>, key: Option<String>, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { location: None, key: None, message: message.into() }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Config { key, .. } => key.as_deref(),
            _ => None,
        }
    }
}
