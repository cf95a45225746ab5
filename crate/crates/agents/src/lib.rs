//! Agent pipeline that turns a conversational design brief into a verified
//! fluidic circuit, I/O device notes and seal patterns.
//!
//! Every agent talks through a [`Transport`]; [`MockTransport`] replays
//! fixture directories so the whole pipeline runs offline.

pub mod chat;
pub mod consultant;
mod error;
pub mod extract;
pub mod pipeline;
pub mod project;
pub mod templates;
pub mod transport;

pub use chat::{ChatMessage, ChatRequest, Role, ToolCall, ToolSpec};
pub use consultant::{consultant_turn, ConsultantTurn, DocumentSink, NoPersist};
pub use error::AgentError;
pub use extract::{extract_json, ExtractError, Schema};
pub use pipeline::{
    run_computation_cluster, run_design, run_io_designer, run_project, ComputationOutcome, DesignArtifacts,
    IoDesign, PipelineConfig,
};
pub use project::{DesignProject, PhaseFlags, ProjectStore, PROJECT_FILES};
pub use templates::{AgentKind, AgentRole};
pub use transport::{HttpTransport, MockTransport, RecordingTransport, Transport, TransportConfig};
