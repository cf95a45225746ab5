use fluidc_core::layout::{place, LayoutResult, SaConfig};
use fluidc_core::patterns::{compute, ShapeKind, ShapeRequest};
use fluidc_core::verifier::{inspect, InspectOptions, InspectionReport, TruthRow, TruthTableSpec};
use fluidc_core::{parse_circuit, NetName};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::chat::{ChatMessage, ChatRequest, ToolCall, ToolSpec};
use crate::error::AgentError;
use crate::extract::{extract_json, ExtractError};
use crate::project::{DesignProject, ProjectStore, CIRCUIT_FILE, IO_DESIGN_FILE, REVIEW_FILE};
use crate::templates::{render, AgentKind, AgentRole};
use crate::transport::{Transport, TransportConfig};

const MAX_TOOL_ROUNDS: usize = 8;

const REPROMPT: &str = "Your last answer could not be used. Reply with the JSON object only, exactly in the requested shape.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub inspector_pass_threshold: u8,
    pub max_review_rounds: u32,
    /// Absent when the caller supplies its own transport.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportConfig>,
    /// Simulation settings used by the deterministic verifier.
    pub verifier: InspectOptions,
    pub layout: SaConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inspector_pass_threshold: 4,
            max_review_rounds: 3,
            transport: None,
            verifier: InspectOptions::default(),
            layout: SaConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(1..=5).contains(&self.inspector_pass_threshold) {
            return Err(AgentError::Config("inspector_pass_threshold must be in 1..=5".into()));
        }
        if self.max_review_rounds == 0 {
            return Err(AgentError::Config("max_review_rounds must be at least 1".into()));
        }
        self.verifier
            .sim
            .validate()
            .map_err(|e| AgentError::Config(e.to_string()))
    }

    fn inspect_options(&self) -> InspectOptions {
        InspectOptions {
            pass_threshold: self.inspector_pass_threshold,
            ..self.verifier.clone()
        }
    }
}

fn request(role: &AgentRole, transport: &dyn Transport, messages: &[ChatMessage], tools: Vec<ToolSpec>) -> ChatRequest {
    ChatRequest {
        agent: role.name.into(),
        model: transport.model().into(),
        messages: messages.to_vec(),
        tools,
        temperature: transport.temperature(),
    }
}

/// Sends the conversation and extracts the role's JSON answer, reprompting
/// once on failure. The reply is appended to `messages`.
fn ask_json(
    role: &AgentRole,
    transport: &dyn Transport,
    messages: &mut Vec<ChatMessage>,
) -> Result<Map<String, Value>, AgentError> {
    let schema = role.schema.expect("role has an answer schema");
    let mut last = ExtractError::NoJsonFound;
    for attempt in 0..2 {
        if attempt == 1 {
            messages.push(ChatMessage::user(REPROMPT));
        }
        let reply = transport.complete(&request(role, transport, messages, Vec::new()))?;
        messages.push(reply.clone());
        match extract_json(reply.content_str(), &schema) {
            Ok(obj) => return Ok(obj),
            Err(e) => {
                warn!("{}: {e}", role.name);
                last = e;
            }
        }
    }
    Err(AgentError::JsonExtractionFailed {
        agent: role.name.into(),
        source: last,
    })
}

fn as_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Accepts `5`, `"5"`, `"4/5"` and similar; clamps into 1..=5.
pub fn parse_score(v: &Value) -> Option<u8> {
    let n = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => {
            let digits: String = s.trim().chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
            digits.parse().ok()?
        }
        _ => return None,
    };
    n.is_finite().then(|| n.round().clamp(1.0, 5.0) as u8)
}

/// Truth table handed from the logic designer to the engineer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicDesign {
    pub truth_table: String,
    pub description: String,
    /// Machine-checkable form, when the designer supplied valid rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<TruthTableSpec>,
}

fn spec_from_rows(rows: &Value) -> Result<TruthTableSpec, String> {
    let rows: Vec<TruthRow> = serde_json::from_value(rows.clone()).map_err(|e| e.to_string())?;
    let first = rows.first().ok_or("rows is empty")?;
    let spec = TruthTableSpec {
        inputs: first.inputs.keys().cloned().collect::<Vec<NetName>>(),
        outputs: first.outputs.keys().cloned().collect(),
        rows: rows.clone(),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn run_logic_designer(project: &DesignProject, transport: &dyn Transport) -> Result<LogicDesign, AgentError> {
    let role = AgentKind::LogicDesigner.role();
    let system = render(role.template, &project.bindings()?)?;
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user("Write the truth table.")];
    let obj = ask_json(&role, transport, &mut messages)?;
    let spec = match obj.get("rows") {
        None => None,
        Some(rows) => match spec_from_rows(rows) {
            Ok(s) => Some(s),
            Err(e) => {
                warn!("logic_designer rows ignored: {e}");
                None
            }
        },
    };
    Ok(LogicDesign {
        truth_table: as_text(&obj["truth_table"]),
        description: as_text(&obj["description"]),
        spec,
    })
}

/// One engineer proposal and its assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub round: u32,
    pub circuit: String,
    pub description: String,
    pub parses: bool,
    pub model_review: Option<String>,
    pub model_score: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verifier: Option<InspectionReport>,
    /// Model score capped by the verifier; 1 when the circuit does not parse.
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationOutcome {
    pub logic: LogicDesign,
    /// The accepted candidate, or the best one when no round passed.
    pub chosen: Candidate,
    pub accepted: bool,
    pub engineer_calls: u32,
    pub candidates: Vec<Candidate>,
}

fn review_feedback(c: &Candidate) -> String {
    let mut text = format!("Review of your circuit (score {}):\n", c.score);
    if let Some(r) = &c.model_review {
        text.push_str(r);
        text.push('\n');
    }
    if let Some(v) = &c.verifier {
        if v.score < 5 {
            text.push_str("Automated check: ");
            text.push_str(&v.review);
            text.push('\n');
        }
    }
    text.push_str("Revise the circuit and answer in the same JSON shape.");
    text
}

/// Logic designer, then engineer and inspector until a candidate passes or
/// the rounds run out.
pub fn run_computation_cluster(
    project: &DesignProject,
    config: &PipelineConfig,
    transport: &dyn Transport,
) -> Result<ComputationOutcome, AgentError> {
    config.validate()?;
    let bindings = project.bindings()?;
    let logic = run_logic_designer(project, transport)?;
    let options = config.inspect_options();

    let engineer = AgentKind::CircuitEngineer.role();
    let inspector = AgentKind::Inspector.role();
    let mut eng_bindings = bindings.clone();
    eng_bindings.push(("truth_table", logic.truth_table.clone()));
    eng_bindings.push(("description", logic.description.clone()));
    let mut eng_messages = vec![
        ChatMessage::system(render(engineer.template, &eng_bindings)?),
        ChatMessage::user("Design the circuit."),
    ];

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut accepted = false;
    for round in 1..=config.max_review_rounds {
        if let Some(prev) = candidates.last() {
            eng_messages.push(ChatMessage::user(review_feedback(prev)));
        }
        let proposal = ask_json(&engineer, transport, &mut eng_messages)?;
        let circuit = as_text(&proposal["circuit"]);
        let description = as_text(&proposal["description"]);
        info!("round {round}: {circuit}");

        let candidate = match parse_circuit(&circuit) {
            Err(e) => Candidate {
                round,
                model_review: Some(format!("3. Circuit Errors: the circuit does not parse: {e}")),
                circuit,
                description,
                parses: false,
                model_score: None,
                verifier: None,
                score: 1,
            },
            Ok(netlist) => {
                let mut ins_bindings = eng_bindings.clone();
                ins_bindings.push(("circuit", circuit.clone()));
                let mut ins_messages = vec![
                    ChatMessage::system(render(inspector.template, &ins_bindings)?),
                    ChatMessage::user("Review the circuit."),
                ];
                let verdict = ask_json(&inspector, transport, &mut ins_messages)?;
                let model_score = parse_score(&verdict["score"]);
                let report = logic.spec.as_ref().map(|spec| inspect(&netlist, spec, &options));
                let mut score = model_score.unwrap_or(1);
                if let Some(r) = &report {
                    score = score.min(r.score);
                }
                if netlist.has_errors() {
                    score = 1;
                }
                Candidate {
                    round,
                    circuit,
                    description,
                    parses: true,
                    model_review: Some(as_text(&verdict["review"])),
                    model_score,
                    verifier: report,
                    score,
                }
            }
        };
        let pass = candidate.parses && candidate.score >= config.inspector_pass_threshold;
        candidates.push(candidate);
        if pass {
            accepted = true;
            break;
        }
    }
    let chosen = if accepted {
        candidates.last().unwrap().clone()
    } else {
        candidates
            .iter()
            .filter(|c| c.parses)
            .max_by_key(|c| (c.score, c.round))
            .or(candidates.last())
            .unwrap()
            .clone()
    };
    Ok(ComputationOutcome {
        logic,
        chosen,
        accepted,
        engineer_calls: candidates.len() as u32,
        candidates,
    })
}

/// A geometry tool call and the pattern it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCall {
    pub tool: String,
    pub arguments: Value,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoDesign {
    pub input_description: String,
    pub output_description: String,
    pub patterns: Vec<PatternCall>,
}

pub fn io_tools() -> Vec<ToolSpec> {
    let num = json!({"type": "number", "description": "millimetres"});
    let deg = json!({"type": "number", "description": "degrees"});
    let obj = |fields: &[(&str, &Value)]| {
        let props: Map<String, Value> = fields.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect();
        let req: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        json!({"type": "object", "properties": props, "required": req})
    };
    vec![
        ToolSpec::function("Calculate_Sphere", "Seal pattern for a spherical airbag.", obj(&[("radius", &num)])),
        ToolSpec::function(
            "Calculate_Cylinder",
            "Seal pattern for a cylindrical airbag.",
            obj(&[("radius", &num), ("height", &num)]),
        ),
        ToolSpec::function(
            "Calculate_Box",
            "Seal pattern for a box airbag.",
            obj(&[("length", &num), ("width", &num), ("height", &num)]),
        ),
        ToolSpec::function(
            "Calculate_Fold",
            "Seal pattern for a strip that folds to the given angle.",
            obj(&[("length", &num), ("width", &num), ("angle", &deg)]),
        ),
        ToolSpec::function(
            "Calculate_Bend",
            "Seal pattern for a strip that bends to the given angle.",
            obj(&[("length", &num), ("width", &num), ("angle", &deg)]),
        ),
    ]
}

fn shape_for_tool(name: &str) -> Option<ShapeKind> {
    Some(match name {
        "Calculate_Sphere" => ShapeKind::Sphere,
        "Calculate_Cylinder" => ShapeKind::Cylinder,
        "Calculate_Box" => ShapeKind::Box,
        "Calculate_Fold" => ShapeKind::Fold,
        "Calculate_Bend" => ShapeKind::Bend,
        _ => return None,
    })
}

/// Runs one geometry tool; `Err` carries the message relayed to the model.
fn run_tool(call: &ToolCall) -> Result<PatternCall, String> {
    let name = &call.function.name;
    let shape = shape_for_tool(name).ok_or_else(|| format!("unknown tool {name}"))?;
    let args: Value = serde_json::from_str(&call.function.arguments).map_err(|e| format!("arguments are not JSON: {e}"))?;
    let mut with_shape = args.as_object().ok_or("arguments must be an object")?.clone();
    with_shape.insert("shape".into(), serde_json::to_value(shape).unwrap());
    let req: ShapeRequest = serde_json::from_value(Value::Object(with_shape)).map_err(|e| e.to_string())?;
    let result = compute(&req).map_err(|e| e.to_string())?.to_json();
    Ok(PatternCall {
        tool: name.clone(),
        arguments: args,
        result,
    })
}

pub fn run_io_designer(project: &DesignProject, transport: &dyn Transport) -> Result<IoDesign, AgentError> {
    let role = AgentKind::IoDesigner.role();
    let system = render(role.template, &project.bindings()?)?;
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user("Design the input and output devices.")];
    let mut patterns = Vec::new();
    let mut tool_errors = 0;
    let mut reprompted = false;
    for _ in 0..MAX_TOOL_ROUNDS {
        let reply = transport.complete(&request(&role, transport, &messages, io_tools()))?;
        messages.push(reply.clone());
        if reply.tool_calls.is_empty() {
            match extract_json(reply.content_str(), &role.schema.unwrap()) {
                Ok(obj) => {
                    return Ok(IoDesign {
                        input_description: as_text(&obj["input_description"]),
                        output_description: as_text(&obj["output_description"]),
                        patterns,
                    })
                }
                Err(e) if reprompted => {
                    return Err(AgentError::JsonExtractionFailed {
                        agent: role.name.into(),
                        source: e,
                    })
                }
                Err(e) => {
                    warn!("{}: {e}", role.name);
                    reprompted = true;
                    messages.push(ChatMessage::user(REPROMPT));
                    continue;
                }
            }
        }
        for call in &reply.tool_calls {
            match run_tool(call) {
                Ok(p) => {
                    let mut brief = p.result.clone();
                    brief.as_object_mut().unwrap().remove("svg");
                    messages.push(ChatMessage::tool_result(&call.id, brief.to_string()));
                    patterns.push(p);
                }
                Err(reason) => {
                    tool_errors += 1;
                    if tool_errors > 1 {
                        return Err(AgentError::ToolFailed {
                            tool: call.function.name.clone(),
                            reason,
                        });
                    }
                    messages.push(ChatMessage::tool_result(&call.id, format!("error: {reason}")));
                }
            }
        }
    }
    Err(AgentError::ToolLoop {
        agent: role.name.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignArtifacts {
    pub computation: ComputationOutcome,
    pub io: IoDesign,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutResult>,
}

impl DesignArtifacts {
    /// Contents of circuit.json.
    pub fn circuit_document(&self) -> Value {
        let c = &self.computation;
        let mut doc = json!({
            "circuit": c.chosen.circuit,
            "description": c.chosen.description,
            "truth_table": c.logic.truth_table,
            "truth_table_description": c.logic.description,
            "accepted": c.accepted,
            "rounds": c.engineer_calls,
        });
        if let Some(spec) = &c.logic.spec {
            doc["spec"] = serde_json::to_value(spec).unwrap();
        }
        if let Some(layout) = &self.layout {
            doc["layout"] = serde_json::to_value(layout).unwrap();
        }
        doc
    }

    /// Contents of review.json.
    pub fn review_document(&self) -> Value {
        let c = &self.computation;
        let history: Vec<Value> = c
            .candidates
            .iter()
            .map(|k| {
                json!({
                    "round": k.round,
                    "circuit": k.circuit,
                    "review": k.model_review,
                    "model_score": k.model_score,
                    "verifier_score": k.verifier.as_ref().map(|v| v.score),
                    "score": k.score,
                })
            })
            .collect();
        let mut doc = json!({
            "review": c.chosen.model_review.clone().unwrap_or_default(),
            "score": c.chosen.score,
            "rounds": history,
        });
        if let Some(v) = &c.chosen.verifier {
            doc["verifier"] = serde_json::to_value(v).unwrap();
        }
        doc
    }
}

/// Computation cluster and I/O designer run side by side.
pub fn run_design(
    project: &DesignProject,
    config: &PipelineConfig,
    transport: &dyn Transport,
) -> Result<DesignArtifacts, AgentError> {
    config.validate()?;
    project.bindings()?;
    let (computation, io) = std::thread::scope(|s| {
        let io = s.spawn(|| run_io_designer(project, transport));
        let computation = run_computation_cluster(project, config, transport);
        (computation, io.join().expect("io designer thread panicked"))
    });
    let computation = computation?;
    let io = io?;
    let layout = parse_circuit(&computation.chosen.circuit)
        .ok()
        .filter(|n| !n.is_empty() && !n.has_errors())
        .and_then(|n| match place(&n, &config.layout) {
            Ok(l) => Some(l),
            Err(e) => {
                warn!("layout skipped: {e}");
                None
            }
        });
    Ok(DesignArtifacts { computation, io, layout })
}

/// Loads a project, runs the pipeline and persists circuit.json,
/// review.json and io_design.json.
pub fn run_project(
    store: &ProjectStore,
    name: &str,
    config: &PipelineConfig,
    transport: &dyn Transport,
) -> Result<DesignArtifacts, AgentError> {
    let project = store.load(name)?;
    let artifacts = run_design(&project, config, transport)?;
    store.write_json(name, CIRCUIT_FILE, &artifacts.circuit_document())?;
    store.write_json(name, REVIEW_FILE, &artifacts.review_document())?;
    store.write_json(name, IO_DESIGN_FILE, &artifacts.io)?;
    Ok(artifacts)
}
