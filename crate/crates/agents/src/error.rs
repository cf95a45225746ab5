use thiserror::Error;

use crate::extract::ExtractError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no mock fixture for agent `{agent}` (request hash {hash}, call {call})")]
    FixtureMissing { agent: String, hash: String, call: usize },
    #[error("tool call `{tool}` has invalid arguments: {reason}")]
    MalformedToolCall { tool: String, reason: String },
    #[error("{agent} did not return usable JSON after a reprompt: {source}")]
    JsonExtractionFailed {
        agent: String,
        #[source]
        source: ExtractError,
    },
    #[error("tool `{tool}` failed twice: {reason}")]
    ToolFailed { tool: String, reason: String },
    #[error("{agent} kept calling tools without producing an answer")]
    ToolLoop { agent: String },
    #[error("template slot `{{{0}}}` has no binding")]
    UnboundSlot(String),
    #[error("project document `{0}` is missing")]
    MissingDocument(String),
    #[error("invalid project document `{file}`: {reason}")]
    InvalidDocument { file: String, reason: String },
    #[error("invalid project name `{0}`")]
    InvalidProjectName(String),
    #[error("unknown project document `{0}`")]
    UnknownDocument(String),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
