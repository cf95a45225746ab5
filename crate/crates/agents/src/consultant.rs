use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chat::{ChatMessage, ChatRequest, ToolCall, ToolSpec};
use crate::error::AgentError;
use crate::project::{
    ComputationModule, DesignGoal, DesignProject, InputModule, OutputModule, PhaseFlags,
    COMPUTATION_MODULE_FILE, DESIGN_GOAL_FILE, INPUT_MODULE_FILE, OUTPUT_MODULE_FILE,
};
use crate::templates::{AgentKind, CONSULTANT};
use crate::transport::Transport;

/// Tool round trips allowed inside one user turn.
const MAX_TOOL_ROUNDS: usize = 8;

/// Persists consultant documents as they are written.
pub trait DocumentSink {
    fn persist(&self, file: &str, value: &Value) -> Result<(), AgentError>;
}

/// Sink that keeps documents only in the returned project.
pub struct NoPersist;

impl DocumentSink for NoPersist {
    fn persist(&self, _: &str, _: &Value) -> Result<(), AgentError> {
        Ok(())
    }
}

impl<F: Fn(&str, &Value) -> Result<(), AgentError>> DocumentSink for F {
    fn persist(&self, file: &str, value: &Value) -> Result<(), AgentError> {
        self(file, value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsultantTurn {
    pub reply: String,
    pub flags: PhaseFlags,
    /// Set once the model asked to move on with every phase complete.
    pub next_agent_requested: bool,
    /// Calls rejected for arriving out of phase order.
    pub phase_violations: Vec<String>,
}

fn string_schema() -> Value {
    json!({"type": "string"})
}

pub fn consultant_tools() -> Vec<ToolSpec> {
    let input = json!({
        "type": "object",
        "properties": {
            "name": string_schema(),
            "attribute": {"type": "string", "enum": ["Binary", "Duration", "Frequency", "Edge"]},
            "location": string_schema(),
            "manipulation": string_schema(),
            "note": string_schema()
        },
        "required": ["name", "attribute", "location", "manipulation"]
    });
    let output = json!({
        "type": "object",
        "properties": {
            "name": string_schema(),
            "feedback": {"type": "string", "enum": ["Shape-changing", "Haptic", "Olfactory", "Acoustic"]},
            "note": string_schema()
        },
        "required": ["name", "feedback"]
    });
    let rule = json!({
        "type": "object",
        "properties": {"output": string_schema(), "condition": string_schema()},
        "required": ["output", "condition"]
    });
    let obj = |props: Value, required: Value| {
        json!({"type": "object", "properties": props, "required": required})
    };
    vec![
        ToolSpec::function(
            "write_design_goal",
            "Save the agreed design goal.",
            obj(json!({"goal": string_schema()}), json!(["goal"])),
        ),
        ToolSpec::function(
            "write_input_module",
            "Save the input module.",
            obj(json!({"inputs": {"type": "array", "items": input}}), json!(["inputs"])),
        ),
        ToolSpec::function(
            "write_output_module",
            "Save the output module.",
            obj(json!({"outputs": {"type": "array", "items": output}}), json!(["outputs"])),
        ),
        ToolSpec::function(
            "write_computation_module",
            "Save the activation condition of each output.",
            obj(json!({"rules": {"type": "array", "items": rule}}), json!(["rules"])),
        ),
        ToolSpec::function(
            "ask_user_next_agent",
            "Hand the finished design to the implementation agents.",
            obj(json!({}), json!([])),
        ),
    ]
}

fn parse_args<T: DeserializeOwned>(call: &ToolCall) -> Result<T, AgentError> {
    let malformed = |reason: String| AgentError::MalformedToolCall {
        tool: call.function.name.clone(),
        reason,
    };
    let raw = if call.function.arguments.trim().is_empty() {
        "{}"
    } else {
        &call.function.arguments
    };
    serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))
}

fn checked<T>(call: &ToolCall, doc: T, validate: impl Fn(&T) -> Result<(), String>) -> Result<T, AgentError> {
    validate(&doc).map_err(|reason| AgentError::MalformedToolCall {
        tool: call.function.name.clone(),
        reason,
    })?;
    Ok(doc)
}

fn store<T: Serialize>(sink: &dyn DocumentSink, file: &str, doc: &T) -> Result<(), AgentError> {
    sink.persist(file, &serde_json::to_value(doc).expect("document serializes"))
}

/// One user message to the consultant, including any tool round trips the
/// model makes before replying.
pub fn consultant_turn(
    project: &mut DesignProject,
    history: &mut Vec<ChatMessage>,
    user_message: &str,
    transport: &dyn Transport,
    sink: &dyn DocumentSink,
) -> Result<ConsultantTurn, AgentError> {
    if history.is_empty() {
        history.push(ChatMessage::system(CONSULTANT));
    }
    history.push(ChatMessage::user(user_message));
    let role = AgentKind::Consultant.role();
    let mut turn = ConsultantTurn {
        reply: String::new(),
        flags: project.flags(),
        next_agent_requested: false,
        phase_violations: Vec::new(),
    };
    for _ in 0..MAX_TOOL_ROUNDS {
        let request = ChatRequest {
            agent: role.name.into(),
            model: transport.model().into(),
            messages: history.clone(),
            tools: consultant_tools(),
            temperature: transport.temperature(),
        };
        let reply = transport.complete(&request)?;
        history.push(reply.clone());
        if reply.tool_calls.is_empty() {
            turn.reply = reply.content.unwrap_or_default();
            turn.flags = project.flags();
            return Ok(turn);
        }
        for call in &reply.tool_calls {
            let result = dispatch(project, call, sink, &mut turn)?;
            history.push(ChatMessage::tool_result(&call.id, result));
        }
    }
    Err(AgentError::ToolLoop {
        agent: role.name.into(),
    })
}

fn dispatch(
    project: &mut DesignProject,
    call: &ToolCall,
    sink: &dyn DocumentSink,
    turn: &mut ConsultantTurn,
) -> Result<String, AgentError> {
    let name = call.function.name.as_str();
    match name {
        "write_design_goal" => {
            let doc = checked(call, parse_args::<DesignGoal>(call)?, DesignGoal::validate)?;
            store(sink, DESIGN_GOAL_FILE, &doc)?;
            project.design_goal = Some(doc);
        }
        "write_input_module" => {
            let doc = checked(call, parse_args::<InputModule>(call)?, InputModule::validate)?;
            store(sink, INPUT_MODULE_FILE, &doc)?;
            project.input_module = Some(doc);
        }
        "write_output_module" => {
            let doc = checked(call, parse_args::<OutputModule>(call)?, OutputModule::validate)?;
            store(sink, OUTPUT_MODULE_FILE, &doc)?;
            project.output_module = Some(doc);
        }
        "write_computation_module" => {
            let doc = checked(call, parse_args::<ComputationModule>(call)?, ComputationModule::validate)?;
            store(sink, COMPUTATION_MODULE_FILE, &doc)?;
            project.computation_module = Some(doc);
        }
        "ask_user_next_agent" => {
            let flags = project.flags();
            if !flags.all() {
                let msg = format!(
                    "ask_user_next_agent rejected: {} of 4 phases complete",
                    flags.count()
                );
                warn!("{msg}");
                turn.phase_violations.push(msg.clone());
                return Ok(format!("{msg}. Finish the remaining phases first."));
            }
            turn.next_agent_requested = true;
            return Ok("design handed to the implementation agents".into());
        }
        other => {
            return Err(AgentError::MalformedToolCall {
                tool: other.into(),
                reason: "unknown tool".into(),
            })
        }
    }
    turn.flags = project.flags();
    Ok(format!("{name} saved"))
}
