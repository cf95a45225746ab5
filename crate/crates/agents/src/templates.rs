use crate::error::AgentError;
use crate::extract::Schema;

pub const TEMPLATE_VERSION: u32 = 1;

const FCHDL_REFERENCE: &str = "\
Operators (inputs before `;`, outputs after; nets are named freely, primary \
inputs are `A`, `B`, ... and outputs are `Output I`, `Output II`, ...):
- NOT(x; y), OR(x, y; z), AND(x, y; z), NOR(x, y; z), NAND(x, y; z), XOR(x, y; z)
- Filter(x, hz; y): y is 1 while x toggles at about `hz` cycles per second
- Timer(x, seconds; y): y turns 1 once x has stayed 1 for `seconds`; any drop of x resets it
- EdgeDetector(x; y, seconds): y pulses 1 for `seconds` after x rises
- Register(D, E; Q, Qn): Q follows D while E = 0 and holds while E = 1; Qn is its complement
- Multiplexer(D0, D1, D2, D3; S1, S0; Y): routes the selected data line to Y
- Demultiplexer(X; S1, S0; D0, D1, D2, D3): routes X to the selected line, others 0
- Diode(x, forward; y) or Diode(x, backward; y): joins outputs onto a shared net
Example: NOT(A; C) AND(C, B; Output I)";

pub const CONSULTANT: &str = "\
You are the consultant of a design tool for fluidic computation interfaces: \
non-electronic devices where air pressure carries logic (pressurised = 1, \
atmospheric = 0). They sense only forces and answer with shape change, touch, \
scent or sound. Help the designer settle four things, one at a time, and \
answer questions briefly for someone new to the field.

1. Design goal. Describe what the device does, what force it senses and what \
feedback it gives. Save it with write_design_goal.
2. Input module. Name inputs with letters (A, B, ...). For each give an \
attribute (Binary, Duration, Frequency or Edge), where it sits, how it is \
pressed and a note holding the threshold, duration, frequency or edge \
direction. Keep inputs from interfering. Save with write_input_module.
3. Output module. Name outputs with Roman numerals (I, II, ...). For each give \
a feedback type (Shape-changing, Haptic, Olfactory or Acoustic) and a note on \
the shape, body part, scent or sound. Save with write_output_module.
4. Computation module. For each output state the condition that activates it \
and when it stays off. Save with write_computation_module.

When all four are saved and the designer confirms the design is finished, call \
ask_user_next_agent. Never call it earlier.";

pub const LOGIC_DESIGNER: &str = "\
You turn a fluidic interface definition into logic. Read the module \
information, count the input and output ports, and write the truth table for \
the computation module. Inputs with Duration, Frequency or Edge attributes \
need a sentence naming the port and the timing involved. Prefer the simplest \
logic that meets the goal.

Module information:
{{
  \"Design Goal\": \"{design_goal}\",
  \"Input Module\": \"{input_module}\",
  \"Output Module\": \"{output_module}\",
  \"Computation Module\": \"{computation_module}\"
}}

Answer with JSON only:
{{\"truth_table\": \"If A = 1 and B = 0, then Output I = 1; ...\", \
\"description\": \"how timed inputs must be handled\", \
\"rows\": [{{\"in\": {{\"A\": 0}}, \"out\": {{\"Output I\": 1}}}}]}}
`rows` is optional and lists the steady-state table using the circuit's net \
names once timed conditions are satisfied.";

pub const CIRCUIT_ENGINEER: &str = "\
You assemble fluidic circuits from a fixed operator set. Build a circuit that \
realises the design document below with as few operators as possible, then \
check it against every row of the truth table before answering.

{fchdl}

Design document:
{{\"truth_table\": \"{truth_table}\", \"description\": \"{description}\"}}

Answer with JSON only:
{{\"circuit\": \"NOT(A; C) AND(C, B; Output I)\", \"description\": \"how the circuit works\"}}";

pub const INSPECTOR: &str = "\
You review fluidic circuits. Compare the engineer's circuit with the \
designer's document: test every truth-table row, check the operator syntax, \
flag operators that never reach an output, and note any other defect. Keep \
the review short and direct.

{fchdl}

Designer's document:
{{\"description\": \"{description}\", \"truth_table\": \"{truth_table}\", \
\"computation_module\": \"{computation_module}\", \"design_goal\": \"{design_goal}\"}}
Engineer's circuit:
{{\"circuit\": \"{circuit}\"}}

Answer with JSON only:
{{\"review\": \"1.Truth Table: ... 2.Circuit Components: ... 3. Circuit Errors: ...\", \"score\": 1-5}}
You may add a corrected \"circuit\" field.";

pub const IO_DESIGNER: &str = "\
You design the airbags and tubes at the edges of a fluidic interface.

Module information:
{{
  \"Design Goal\": \"{design_goal}\",
  \"Input Module\": \"{input_module}\",
  \"Output Module\": \"{output_module}\",
  \"Computation Module\": \"{computation_module}\"
}}

For each input describe the airbag (size, shape, material) and where it goes. \
Elastic bags with one exhaust and one intake port suit Duration and Frequency \
inputs; Binary and Edge inputs need a single port. For each output: \
shape-changing outputs are airbags, haptic outputs are tubes aimed at the body \
part, olfactory outputs are tubes over an essential oil, and acoustic outputs \
are tubes driving a whistle or similar. When a shape-changing output is a \
sphere, cylinder, box, folding strip or bending strip, call the matching \
Calculate_* tool with millimetre dimensions and explain the chosen sizes.

Answer with JSON only:
{{\"input_description\": \"For Input A, ...\", \"output_description\": \"For Output I, ...\"}}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Consultant,
    LogicDesigner,
    CircuitEngineer,
    Inspector,
    IoDesigner,
}

/// Static description of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentRole {
    pub kind: AgentKind,
    /// Fixture and log label.
    pub name: &'static str,
    pub template: &'static str,
    pub tools: &'static [&'static str],
    /// Whether the conversation carries over between calls.
    pub requires_memory: bool,
    pub schema: Option<Schema>,
}

pub const CONSULTANT_TOOLS: [&str; 5] = [
    "write_design_goal",
    "write_input_module",
    "write_output_module",
    "write_computation_module",
    "ask_user_next_agent",
];

pub const IO_TOOLS: [&str; 5] = [
    "Calculate_Sphere",
    "Calculate_Cylinder",
    "Calculate_Box",
    "Calculate_Fold",
    "Calculate_Bend",
];

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Consultant,
        AgentKind::LogicDesigner,
        AgentKind::CircuitEngineer,
        AgentKind::Inspector,
        AgentKind::IoDesigner,
    ];

    pub fn role(self) -> AgentRole {
        match self {
            AgentKind::Consultant => AgentRole {
                kind: self,
                name: "consultant",
                template: CONSULTANT,
                tools: &CONSULTANT_TOOLS,
                requires_memory: true,
                schema: None,
            },
            AgentKind::LogicDesigner => AgentRole {
                kind: self,
                name: "logic_designer",
                template: LOGIC_DESIGNER,
                tools: &[],
                requires_memory: false,
                schema: Some(Schema {
                    required: &["truth_table", "description"],
                    optional: &["rows"],
                }),
            },
            AgentKind::CircuitEngineer => AgentRole {
                kind: self,
                name: "circuit_engineer",
                template: CIRCUIT_ENGINEER,
                tools: &[],
                requires_memory: true,
                schema: Some(Schema {
                    required: &["circuit", "description"],
                    optional: &[],
                }),
            },
            AgentKind::Inspector => AgentRole {
                kind: self,
                name: "inspector",
                template: INSPECTOR,
                tools: &[],
                requires_memory: false,
                schema: Some(Schema {
                    required: &["review", "score"],
                    optional: &["circuit"],
                }),
            },
            AgentKind::IoDesigner => AgentRole {
                kind: self,
                name: "io_designer",
                template: IO_DESIGNER,
                tools: &IO_TOOLS,
                requires_memory: true,
                schema: Some(Schema {
                    required: &["input_description", "output_description"],
                    optional: &[],
                }),
            },
        }
    }
}

/// Slot names in order of appearance. `{{` and `}}` are literal braces.
pub fn slots(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    scan(template, |piece| {
        if let Piece::Slot(s) = piece {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    });
    out
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn scan<'a>(template: &'a str, mut f: impl FnMut(Piece<'a>)) {
    let mut rest = template;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("{{") {
            f(Piece::Text("{"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix("}}") {
            f(Piece::Text("}"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix('{') {
            let end = r.find('}').filter(|&e| {
                e > 0 && r[..e].chars().all(|c| c.is_ascii_lowercase() || c == '_')
            });
            match end {
                Some(e) => {
                    f(Piece::Slot(&r[..e]));
                    rest = &r[e + 1..];
                }
                None => {
                    f(Piece::Text("{"));
                    rest = r;
                }
            }
        } else {
            let next = rest.find(['{', '}']).unwrap_or(rest.len()).max(1);
            f(Piece::Text(&rest[..next]));
            rest = &rest[next..];
        }
    }
}

/// Fills every slot; an unbound slot is an error.
pub fn render(template: &str, bindings: &[(&str, String)]) -> Result<String, AgentError> {
    let mut out = String::with_capacity(template.len());
    let mut missing = None;
    scan(template, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Slot(s) => match bindings.iter().find(|(k, _)| *k == s) {
            Some((_, v)) => out.push_str(v),
            None if s == "fchdl" => out.push_str(FCHDL_REFERENCE),
            None => {
                missing.get_or_insert_with(|| s.to_string());
            }
        },
    });
    match missing {
        Some(s) => Err(AgentError::UnboundSlot(s)),
        None => Ok(out),
    }
}
