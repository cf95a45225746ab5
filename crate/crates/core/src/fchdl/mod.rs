//! FC-HDL: the operator description language for fluidic circuits.
//!
//! A circuit is a whitespace-separated sequence of operator instances such as
//! `Timer(Q, 1800; TimerOutput)`. Argument groups are separated by `;` and
//! items within a group by `,`. Operator names are matched case-insensitively,
//! net names are case-sensitive and trimmed.

mod parse;
pub(crate) mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use parse::parse_circuit;
pub use validate::{validate_netlist, Diagnostic, DiagnosticKind, Severity};

/// Default pulse length for an `EdgeDetector` written without a time argument.
pub const DEFAULT_EDGE_PULSE_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum FchdlError {
    #[error("circuit is empty")]
    EmptyCircuit { offset: usize },
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unknown operator `{name}` at byte {offset}")]
    UnknownOperator { offset: usize, name: String },
    #[error("arity error at byte {offset}: {kind} expects {expected}, found {found}")]
    ArityError {
        offset: usize,
        kind: OperatorKind,
        expected: String,
        found: String,
    },
    #[error("bad parameter at byte {offset}: {message}")]
    BadParameter { offset: usize, message: String },
}

impl FchdlError {
    /// Byte offset into the source text where the problem was detected.
    pub fn offset(&self) -> usize {
        match self {
            FchdlError::EmptyCircuit { offset }
            | FchdlError::SyntaxError { offset, .. }
            | FchdlError::UnknownOperator { offset, .. }
            | FchdlError::ArityError { offset, .. }
            | FchdlError::BadParameter { offset, .. } => *offset,
        }
    }
}

/// A named pneumatic line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetName(String);

impl NetName {
    pub fn new(name: impl AsRef<str>) -> Self {
        NetName(name.as_ref().trim().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::ops::Deref for NetName {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for NetName {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NetName {
    fn from(s: &str) -> Self {
        NetName::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperatorKind {
    Not,
    Or,
    And,
    Nor,
    Nand,
    Xor,
    Filter,
    Timer,
    Register,
    EdgeDetector,
    Multiplexer,
    Demultiplexer,
    Diode,
}

/// One argument position in an operator's textual signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Input,
    Output,
    Number,
    OptionalNumber,
    Direction,
}

use Slot::*;

impl OperatorKind {
    pub const ALL: [OperatorKind; 13] = [
        OperatorKind::Not,
        OperatorKind::Or,
        OperatorKind::And,
        OperatorKind::Nor,
        OperatorKind::Nand,
        OperatorKind::Xor,
        OperatorKind::Filter,
        OperatorKind::Timer,
        OperatorKind::Register,
        OperatorKind::EdgeDetector,
        OperatorKind::Multiplexer,
        OperatorKind::Demultiplexer,
        OperatorKind::Diode,
    ];

    /// Spelling used when emitting canonical FC-HDL.
    pub fn hdl_name(self) -> &'static str {
        match self {
            OperatorKind::Not => "NOT",
            OperatorKind::Or => "OR",
            OperatorKind::And => "AND",
            OperatorKind::Nor => "NOR",
            OperatorKind::Nand => "NAND",
            OperatorKind::Xor => "XOR",
            OperatorKind::Filter => "Filter",
            OperatorKind::Timer => "Timer",
            OperatorKind::Register => "Register",
            OperatorKind::EdgeDetector => "EdgeDetector",
            OperatorKind::Multiplexer => "Multiplexer",
            OperatorKind::Demultiplexer => "Demultiplexer",
            OperatorKind::Diode => "Diode",
        }
    }

    /// Case-insensitive lookup; underscores are ignored so that
    /// `EDGE_DETECTOR` and `EdgeDetector` both resolve.
    pub fn from_name(name: &str) -> Option<OperatorKind> {
        let key: String = name
            .chars()
            .filter(|c| *c != '_')
            .flat_map(char::to_uppercase)
            .collect();
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.hdl_name().to_uppercase() == key)
    }

    pub(crate) fn signature(self) -> &'static [&'static [Slot]] {
        match self {
            OperatorKind::Not => &[&[Input], &[Output]],
            OperatorKind::Or
            | OperatorKind::And
            | OperatorKind::Nor
            | OperatorKind::Nand
            | OperatorKind::Xor => &[&[Input, Input], &[Output]],
            OperatorKind::Filter | OperatorKind::Timer => &[&[Input, Number], &[Output]],
            OperatorKind::Register => &[&[Input, Input], &[Output, Output]],
            OperatorKind::EdgeDetector => &[&[Input], &[Output, OptionalNumber]],
            OperatorKind::Multiplexer => {
                &[&[Input, Input, Input, Input], &[Input, Input], &[Output]]
            }
            OperatorKind::Demultiplexer => {
                &[&[Input], &[Input, Input], &[Output, Output, Output, Output]]
            }
            OperatorKind::Diode => &[&[Input, Direction], &[Output]],
        }
    }

    fn count(self, pred: impl Fn(Slot) -> bool) -> usize {
        self.signature()
            .iter()
            .flat_map(|g| g.iter())
            .filter(|s| pred(**s))
            .count()
    }

    pub fn input_count(self) -> usize {
        self.count(|s| s == Input)
    }

    pub fn output_count(self) -> usize {
        self.count(|s| s == Output)
    }

    /// Number of numeric parameters, counting an optional one.
    pub fn param_count(self) -> usize {
        self.count(|s| matches!(s, Number | OptionalNumber))
    }

    /// Zero-delay operators whose output depends only on current inputs.
    pub fn is_combinational(self) -> bool {
        matches!(
            self,
            OperatorKind::Not
                | OperatorKind::Or
                | OperatorKind::And
                | OperatorKind::Nor
                | OperatorKind::Nand
                | OperatorKind::Xor
                | OperatorKind::Multiplexer
                | OperatorKind::Demultiplexer
                | OperatorKind::Diode
        )
    }

    /// Operators carrying a duration or frequency parameter.
    pub fn is_timed(self) -> bool {
        matches!(
            self,
            OperatorKind::Filter | OperatorKind::Timer | OperatorKind::EdgeDetector
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.hdl_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorInstance {
    pub id: usize,
    pub kind: OperatorKind,
    /// Hz for `Filter`, seconds for `Timer` and `EdgeDetector`.
    pub params: Vec<f64>,
    pub direction: Option<Direction>,
    pub inputs: Vec<NetName>,
    pub outputs: Vec<NetName>,
}

impl OperatorInstance {
    /// Builds an operator, checking counts against the arity table.
    ///
    /// An `EdgeDetector` with no parameter gets the default pulse length.
    pub fn new(
        id: usize,
        kind: OperatorKind,
        inputs: Vec<NetName>,
        outputs: Vec<NetName>,
        mut params: Vec<f64>,
        direction: Option<Direction>,
    ) -> Result<Self, FchdlError> {
        if kind == OperatorKind::EdgeDetector && params.is_empty() {
            params.push(DEFAULT_EDGE_PULSE_S);
        }
        let arity = |what: &str, expected: usize, found: usize| FchdlError::ArityError {
            offset: 0,
            kind,
            expected: format!("{expected} {what}"),
            found: found.to_string(),
        };
        if inputs.len() != kind.input_count() {
            return Err(arity("input nets", kind.input_count(), inputs.len()));
        }
        if outputs.len() != kind.output_count() {
            return Err(arity("output nets", kind.output_count(), outputs.len()));
        }
        if params.len() != kind.param_count() {
            return Err(arity("numeric parameters", kind.param_count(), params.len()));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(FchdlError::BadParameter {
                offset: 0,
                message: format!("{kind} parameter must be a positive number, got {bad}"),
            });
        }
        let direction = match (kind, direction) {
            (OperatorKind::Diode, None) => {
                return Err(FchdlError::BadParameter {
                    offset: 0,
                    message: "Diode requires a direction (forward or backward)".into(),
                })
            }
            (OperatorKind::Diode, d) => d,
            _ => None,
        };
        for net in inputs.iter().chain(&outputs) {
            if net.is_empty() || net.contains([',', ';', '(', ')']) {
                return Err(FchdlError::SyntaxError {
                    offset: 0,
                    message: format!("invalid net name `{net}`"),
                });
            }
        }
        Ok(OperatorInstance {
            id,
            kind,
            params,
            direction,
            inputs,
            outputs,
        })
    }

    /// The single numeric parameter of timed operators.
    pub fn param(&self) -> Option<f64> {
        self.params.first().copied()
    }

    pub fn nets(&self) -> impl Iterator<Item = &NetName> {
        self.inputs.iter().chain(self.outputs.iter())
    }

    /// Canonical FC-HDL text for this operator.
    pub fn to_hdl(&self) -> String {
        let mut inputs = self.inputs.iter();
        let mut outputs = self.outputs.iter();
        let mut params = self.params.iter();
        let groups: Vec<String> = self
            .kind
            .signature()
            .iter()
            .map(|group| {
                group
                    .iter()
                    .filter_map(|slot| match slot {
                        Input => inputs.next().map(|n| n.to_string()),
                        Output => outputs.next().map(|n| n.to_string()),
                        Number | OptionalNumber => params.next().map(|p| format_number(*p)),
                        Direction => self.direction.map(|d| d.as_str().to_string()),
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .collect();
        format!("{}({})", self.kind.hdl_name(), groups.join("; "))
    }
}

pub(crate) fn format_number(v: f64) -> String {
    format!("{v}")
}

/// A parsed circuit.
#[derive(Debug, Clone)]
pub struct Netlist {
    operators: Vec<OperatorInstance>,
    nets: BTreeSet<NetName>,
    primary_inputs: BTreeSet<NetName>,
    primary_outputs: BTreeSet<NetName>,
    drivers: BTreeMap<NetName, Vec<usize>>,
    consumers: BTreeMap<NetName, Vec<usize>>,
    diagnostics: Vec<Diagnostic>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.operators == other.operators
    }
}

impl Netlist {
    /// Assembles a netlist from operators, renumbering ids in order and
    /// running structural validation.
    pub fn new(mut operators: Vec<OperatorInstance>) -> Self {
        for (i, op) in operators.iter_mut().enumerate() {
            op.id = i;
        }
        let mut nets = BTreeSet::new();
        let mut drivers: BTreeMap<NetName, Vec<usize>> = BTreeMap::new();
        let mut consumers: BTreeMap<NetName, Vec<usize>> = BTreeMap::new();
        for op in &operators {
            for n in &op.inputs {
                nets.insert(n.clone());
                consumers.entry(n.clone()).or_default().push(op.id);
            }
            for n in &op.outputs {
                nets.insert(n.clone());
                drivers.entry(n.clone()).or_default().push(op.id);
            }
        }
        let primary_inputs: BTreeSet<NetName> = nets
            .iter()
            .filter(|n| !drivers.contains_key(*n))
            .cloned()
            .collect();
        // Nets named "Output ..." are the designer's declared outputs. When a
        // circuit declares any, unconsumed helper nets are dangling rather than
        // additional outputs.
        let named: BTreeSet<NetName> = drivers
            .keys()
            .filter(|n| n.starts_with("Output"))
            .cloned()
            .collect();
        let primary_outputs = if named.is_empty() {
            drivers
                .keys()
                .filter(|n| !consumers.contains_key(*n))
                .cloned()
                .collect()
        } else {
            named
        };
        let mut netlist = Netlist {
            operators,
            nets,
            primary_inputs,
            primary_outputs,
            drivers,
            consumers,
            diagnostics: Vec::new(),
        };
        netlist.diagnostics = validate_netlist(&netlist);
        netlist
    }

    pub fn operators(&self) -> &[OperatorInstance] {
        &self.operators
    }

    pub fn nets(&self) -> &BTreeSet<NetName> {
        &self.nets
    }

    pub fn primary_inputs(&self) -> &BTreeSet<NetName> {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &BTreeSet<NetName> {
        &self.primary_outputs
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }

    /// Operator ids driving `net`.
    pub fn drivers(&self, net: &str) -> &[usize] {
        self.drivers.get(net).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Operator ids reading `net`.
    pub fn consumers(&self, net: &str) -> &[usize] {
        self.consumers.get(net).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    /// Canonical FC-HDL source, one space between operators.
    pub fn to_hdl(&self) -> String {
        self.operators
            .iter()
            .map(OperatorInstance::to_hdl)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Emits canonical FC-HDL text for a netlist.
pub fn serialize_circuit(netlist: &Netlist) -> String {
    netlist.to_hdl()
}

// JSON wire form.

#[derive(Serialize, Deserialize)]
struct OperatorWire {
    kind: OperatorKind,
    inputs: Vec<NetName>,
    #[serde(default, serialize_with = "ser_numbers")]
    params: Vec<f64>,
    outputs: Vec<NetName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
}

#[derive(Serialize, Deserialize)]
struct NetlistWire {
    operators: Vec<OperatorWire>,
    #[serde(default)]
    inputs: Vec<NetName>,
    #[serde(default)]
    outputs: Vec<NetName>,
}

/// Whole numbers go out as JSON integers (`1800`, not `1800.0`).
fn ser_numbers<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&JsonNumber(*v))?;
    }
    seq.end()
}

/// f64 that serializes integral values as integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsonNumber(pub f64);

impl Serialize for JsonNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() < 9.0e15 {
            s.serialize_i64(v as i64)
        } else {
            s.serialize_f64(v)
        }
    }
}

impl Serialize for OperatorInstance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OperatorWire {
            kind: self.kind,
            inputs: self.inputs.clone(),
            params: self.params.clone(),
            outputs: self.outputs.clone(),
            direction: self.direction,
        }
        .serialize(s)
    }
}

impl Serialize for Netlist {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Netlist", 3)?;
        st.serialize_field("operators", &self.operators)?;
        st.serialize_field("inputs", &self.primary_inputs)?;
        st.serialize_field("outputs", &self.primary_outputs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Netlist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = NetlistWire::deserialize(d)?;
        let operators = wire
            .operators
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                OperatorInstance::new(i, w.kind, w.inputs, w.outputs, w.params, w.direction)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(Netlist::new(operators))
    }
}
