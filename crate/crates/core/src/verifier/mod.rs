//! Deterministic circuit inspection: truth-table compliance, temporal
//! expectations, redundancy and a 1-5 score.

mod spec;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fchdl::{
    self, parse_circuit, Diagnostic, DiagnosticKind, NetName, Netlist, OperatorKind, Severity,
};
use crate::simulator::{run, SimConfig, SimError, Simulator, Trace, TIME_EPS};

pub use spec::{Expectation, TemporalSpec, TruthRow, TruthTableSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("spec references net `{net}` which is not in the circuit")]
    SpecNetUnknown { net: String },
    #[error("spec input `{net}` is driven inside the circuit")]
    SpecInputNotPrimary { net: String },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    TruthTable,
    Grammar,
    Redundancy,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub category: Category,
    pub location: String,
    pub message: String,
}

impl Finding {
    fn new(category: Category, location: impl Into<String>, message: impl Into<String>) -> Self {
        Finding {
            category,
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Outcome of evaluating one truth-table row.
#[derive(Debug, Clone, PartialEq)]
struct RowOutcome {
    observed: BTreeMap<NetName, u8>,
}

/// Hold time used when lowering a row to a timed run: twice the longest
/// Timer (or EdgeDetector) duration, scaled. Zero for purely combinational
/// circuits, which only need a settle.
pub fn default_hold(netlist: &Netlist, config: &SimConfig) -> f64 {
    netlist
        .operators()
        .iter()
        .filter(|op| matches!(op.kind, OperatorKind::Timer | OperatorKind::EdgeDetector))
        .filter_map(|op| op.param())
        .fold(0.0_f64, f64::max)
        * 2.0
        * config.time_scale
}

fn check_nets(netlist: &Netlist, inputs: &[NetName], outputs: &[NetName]) -> Result<(), VerifyError> {
    for net in inputs {
        if !netlist.nets().contains(net) {
            return Err(VerifyError::SpecNetUnknown { net: net.to_string() });
        }
        if !netlist.primary_inputs().contains(net) {
            return Err(VerifyError::SpecInputNotPrimary { net: net.to_string() });
        }
    }
    for net in outputs {
        if !netlist.nets().contains(net) {
            return Err(VerifyError::SpecNetUnknown { net: net.to_string() });
        }
    }
    Ok(())
}

/// Applies an input assignment to a fresh session and reads outputs after
/// settling, or after `hold` seconds for timed circuits.
fn evaluate_assignment(
    netlist: &Netlist,
    assignment: &BTreeMap<NetName, u8>,
    outputs: &[NetName],
    hold: f64,
    config: &SimConfig,
) -> Result<RowOutcome, VerifyError> {
    let mut sim = Simulator::new(netlist, config.clone())?;
    let pairs: Vec<(&str, u8)> = assignment.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    sim.set_inputs(&pairs)?;
    while sim.time() < hold - TIME_EPS {
        sim.step(config.dt)?;
    }
    let observed = outputs
        .iter()
        .map(|n| (n.clone(), sim.value(n).unwrap_or(0)))
        .collect();
    Ok(RowOutcome { observed })
}

struct RowEvaluator<'a> {
    netlist: &'a Netlist,
    spec: &'a TruthTableSpec,
    config: &'a SimConfig,
    default_hold: f64,
    cache: HashMap<(Vec<u8>, u64), RowOutcome>,
}

impl<'a> RowEvaluator<'a> {
    fn new(netlist: &'a Netlist, spec: &'a TruthTableSpec, config: &'a SimConfig) -> Self {
        RowEvaluator {
            netlist,
            spec,
            config,
            default_hold: default_hold(netlist, config),
            cache: HashMap::new(),
        }
    }

    fn outcome(&mut self, bits: &[u8], hold: Option<f64>) -> Result<RowOutcome, VerifyError> {
        let hold = hold.unwrap_or(self.default_hold);
        let key = (bits.to_vec(), hold.to_bits());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let assignment: BTreeMap<NetName, u8> = self
            .spec
            .inputs
            .iter()
            .cloned()
            .zip(bits.iter().copied())
            .collect();
        let out = evaluate_assignment(
            self.netlist,
            &assignment,
            &self.spec.outputs,
            hold,
            self.config,
        )?;
        self.cache.insert(key, out.clone());
        Ok(out)
    }
}

fn describe(assign: &BTreeMap<NetName, u8>, order: &[NetName]) -> String {
    order
        .iter()
        .filter_map(|n| assign.get(n).map(|v| format!("{n}={v}")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Checks every row of `spec` against the circuit. An empty result means the
/// circuit is compliant.
pub fn check_truth_table(
    netlist: &Netlist,
    spec: &TruthTableSpec,
    config: &SimConfig,
) -> Result<Vec<Finding>, VerifyError> {
    Ok(truth_table_report(netlist, spec, config)?.findings)
}

struct TruthTableReport {
    findings: Vec<Finding>,
    mismatches: usize,
}

fn truth_table_report(
    netlist: &Netlist,
    spec: &TruthTableSpec,
    config: &SimConfig,
) -> Result<TruthTableReport, VerifyError> {
    spec.validate().map_err(VerifyError::InvalidSpec)?;
    config.validate()?;
    check_nets(netlist, &spec.inputs, &spec.outputs)?;
    let mut eval = RowEvaluator::new(netlist, spec, config);
    let mut findings = Vec::new();
    let mut mismatches = 0;
    for (i, row) in spec.rows.iter().enumerate() {
        let bits = spec.row_bits(row);
        let outcome = eval.outcome(&bits, row.hold)?;
        let wrong: Vec<String> = spec
            .outputs
            .iter()
            .filter(|n| outcome.observed.get(*n) != row.outputs.get(*n))
            .map(|n| {
                format!(
                    "expected {n}={}, observed {n}={}",
                    row.outputs[n],
                    outcome.observed.get(n).copied().unwrap_or(0)
                )
            })
            .collect();
        if !wrong.is_empty() {
            mismatches += 1;
            findings.push(Finding::new(
                Category::TruthTable,
                format!("row {i}"),
                format!("with {}: {}", describe(&row.inputs, &spec.inputs), wrong.join("; ")),
            ));
        }
    }
    if mismatches > 0 {
        if let Some(flip) = find_input_inversion(&mut eval)? {
            let names: Vec<String> = flip
                .iter()
                .map(|n| {
                    if n.starts_with("Input") {
                        n.to_string()
                    } else {
                        format!("Input {n}")
                    }
                })
                .collect();
            let joined = match names.len() {
                1 => names[0].clone(),
                k => format!("{} and {}", names[..k - 1].join(", "), names[k - 1]),
            };
            findings.push(Finding::new(
                Category::TruthTable,
                "inputs",
                format!(
                    "The truth table specifications are not fully met by the current circuit description; an inversion of {joined}'s condition is required"
                ),
            ));
        }
    }
    Ok(TruthTableReport { findings, mismatches })
}

/// Largest input count for which the inversion search runs.
const INVERSION_SEARCH_MAX_INPUTS: usize = 8;

/// Smallest set of inputs whose inversion would make every row match.
fn find_input_inversion(eval: &mut RowEvaluator<'_>) -> Result<Option<Vec<NetName>>, VerifyError> {
    let n = eval.spec.inputs.len();
    if n == 0 || n > INVERSION_SEARCH_MAX_INPUTS {
        return Ok(None);
    }
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let spec = eval.spec;
    'mask: for mask in masks {
        for row in &spec.rows {
            let bits: Vec<u8> = spec
                .row_bits(row)
                .iter()
                .enumerate()
                .map(|(k, b)| b ^ ((mask >> k) & 1) as u8)
                .collect();
            let outcome = eval.outcome(&bits, row.hold)?;
            if spec.outputs.iter().any(|o| outcome.observed.get(o) != row.outputs.get(o)) {
                continue 'mask;
            }
        }
        return Ok(Some(
            (0..n)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| spec.inputs[k].clone())
                .collect(),
        ));
    }
    Ok(None)
}

/// Runs the temporal stimulus and checks each expectation holds at some
/// sample within its window.
pub fn check_temporal(
    netlist: &Netlist,
    spec: &TemporalSpec,
    config: &SimConfig,
) -> Result<Vec<Finding>, VerifyError> {
    config.validate()?;
    spec.validate(config.dt).map_err(VerifyError::InvalidSpec)?;
    let inputs: Vec<NetName> = spec.stimulus.events.iter().map(|e| e.net.clone()).collect();
    let outputs: Vec<NetName> = spec.expect.iter().map(|e| e.net.clone()).collect();
    check_nets(netlist, &inputs, &outputs)?;
    let horizon = spec
        .expect
        .iter()
        .map(|e| e.t + e.w)
        .fold(config.dt, f64::max)
        + config.dt;
    let trace = run(netlist, &spec.stimulus, horizon, config.clone())?;
    let mut findings = Vec::new();
    for (i, exp) in spec.expect.iter().enumerate() {
        let (lo, hi) = (exp.t - exp.w, exp.t + exp.w);
        let hit = trace.samples.iter().any(|s| {
            s.t >= lo - TIME_EPS
                && s.t <= hi + TIME_EPS
                && s.values.get(exp.net.as_str()) == Some(&exp.v)
        });
        if !hit {
            findings.push(Finding::new(
                Category::TruthTable,
                format!("expectation {i} at t={}", exp.t),
                format!(
                    "expected {}={} within [{lo:.3}, {hi:.3}]; observed {}",
                    exp.net,
                    exp.v,
                    waveform_excerpt(&trace, exp.net.as_str(), lo, hi)
                ),
            ));
        }
    }
    Ok(findings)
}

/// Compact `t:value` listing of a net around a window, one entry per change.
fn waveform_excerpt(trace: &Trace, net: &str, lo: f64, hi: f64) -> String {
    let mut parts = Vec::new();
    let mut last = None;
    for s in trace
        .samples
        .iter()
        .filter(|s| s.t >= lo - TIME_EPS && s.t <= hi + TIME_EPS)
    {
        let v = s.values.get(net).copied();
        if v != last {
            parts.push(format!("{:.3}:{}", s.t, v.map_or("?".into(), |v| v.to_string())));
            last = v;
        }
    }
    if parts.is_empty() {
        "no samples in window".into()
    } else {
        parts.join(" ")
    }
}

/// Operators with no path to any primary output. Sound but not complete:
/// logically redundant gates that still feed an output are not reported.
pub fn find_redundant(netlist: &Netlist) -> Vec<usize> {
    fchdl::validate::unreachable_operators(netlist)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InspectOptions {
    pub sim: SimConfig,
    pub pass_threshold: u8,
}

impl Default for InspectOptions {
    fn default() -> Self {
        InspectOptions {
            sim: SimConfig::default(),
            pass_threshold: 4,
        }
    }
}

/// Finding counts that drive the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FindingCounts {
    pub grammar_errors: usize,
    pub mismatches: usize,
    pub warnings: usize,
}

type Tier = fn(&FindingCounts) -> bool;

/// Score rubric, checked top to bottom; the first matching tier wins.
pub const RUBRIC: [(Tier, u8); 5] = [
    (|c| c.grammar_errors > 0, 1),
    (|c| c.mismatches > 1, 2),
    (|c| c.mismatches == 1, 3),
    (|c| c.warnings > 0, 4),
    (|_| true, 5),
];

pub fn score(counts: &FindingCounts) -> u8 {
    RUBRIC
        .iter()
        .find(|(tier, _)| tier(counts))
        .map(|(_, s)| *s)
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub review: String,
    pub score: u8,
    pub pass: bool,
    pub truth_table_findings: Vec<Finding>,
    pub grammar_findings: Vec<Finding>,
    pub redundancy_findings: Vec<Finding>,
    pub other_findings: Vec<Finding>,
}

impl InspectionReport {
    fn assemble(
        truth_table_findings: Vec<Finding>,
        grammar_findings: Vec<Finding>,
        redundancy_findings: Vec<Finding>,
        other_findings: Vec<Finding>,
        counts: FindingCounts,
        threshold: u8,
    ) -> Self {
        let score = score(&counts);
        let section = |items: &[Finding], ok: &str| {
            if items.is_empty() {
                ok.to_string()
            } else {
                items
                    .iter()
                    .map(|f| format!("[{}] {}", f.location, f.message))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        let mut components = redundancy_findings.clone();
        components.extend(grammar_findings.iter().cloned());
        let review = format!(
            "1.Truth Table: {} 2.Circuit Components: {} 3. Circuit Errors: {}",
            section(&truth_table_findings, "all rows satisfied."),
            section(&components, "every operator is well-formed and contributes to an output."),
            section(&other_findings, "none found."),
        );
        InspectionReport {
            review,
            score,
            pass: score >= threshold,
            truth_table_findings,
            grammar_findings,
            redundancy_findings,
            other_findings,
        }
    }

    /// The two-field form an inspector agent emits.
    pub fn review_json(&self) -> serde_json::Value {
        serde_json::json!({ "review": self.review, "score": self.score })
    }
}

fn diagnostic_finding(d: &Diagnostic) -> Finding {
    let sev = match d.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    let loc = if !d.operators.is_empty() {
        format!(
            "{sev}: operator {}",
            d.operators.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")
        )
    } else {
        format!("{sev}: nets {}", d.nets.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(","))
    };
    Finding::new(Category::Grammar, loc, d.message.clone())
}

/// Input airbags source a pressure signal, not sustained flow; diodes fed
/// straight from an input are worth a second look.
fn lint_other(netlist: &Netlist) -> Vec<Finding> {
    netlist
        .operators()
        .iter()
        .filter(|op| {
            op.kind == OperatorKind::Diode && netlist.primary_inputs().contains(&op.inputs[0])
        })
        .map(|op| {
            Finding::new(
                Category::Other,
                format!("operator {}", op.id),
                format!(
                    "Diode is fed directly by input `{}`; an input airbag provides a signal but cannot supply continuous airflow",
                    op.inputs[0]
                ),
            )
        })
        .collect()
}

/// Full inspection of a parsed circuit against a truth table.
pub fn inspect(netlist: &Netlist, spec: &TruthTableSpec, options: &InspectOptions) -> InspectionReport {
    let mut counts = FindingCounts::default();
    let mut grammar = Vec::new();
    let mut redundancy = Vec::new();
    for d in netlist.diagnostics() {
        if d.kind == DiagnosticKind::UnreachableOperator {
            continue;
        }
        if d.severity == Severity::Error {
            counts.grammar_errors += 1;
        } else {
            counts.warnings += 1;
        }
        grammar.push(diagnostic_finding(d));
    }
    for id in find_redundant(netlist) {
        counts.warnings += 1;
        redundancy.push(Finding::new(
            Category::Redundancy,
            format!("operator {id}"),
            format!(
                "{} does not contribute to any output and can be removed",
                netlist.operators()[id].to_hdl()
            ),
        ));
    }
    let other = lint_other(netlist);
    counts.warnings += other.len();

    let truth = if counts.grammar_errors > 0 {
        Vec::new()
    } else {
        match truth_table_report(netlist, spec, &options.sim) {
            Ok(report) => {
                counts.mismatches = report.mismatches;
                report.findings
            }
            Err(e) => {
                counts.mismatches = spec.rows.len().max(1);
                vec![Finding::new(Category::TruthTable, "spec", e.to_string())]
            }
        }
    };
    InspectionReport::assemble(truth, grammar, redundancy, other, counts, options.pass_threshold)
}

/// Parses and inspects circuit text; a parse failure scores 1.
pub fn inspect_circuit(text: &str, spec: &TruthTableSpec, options: &InspectOptions) -> InspectionReport {
    match parse_circuit(text) {
        Ok(netlist) => inspect(&netlist, spec, options),
        Err(e) => InspectionReport::assemble(
            Vec::new(),
            vec![Finding::new(
                Category::Grammar,
                format!("error: byte {}", e.offset()),
                e.to_string(),
            )],
            Vec::new(),
            Vec::new(),
            FindingCounts {
                grammar_errors: 1,
                ..Default::default()
            },
            options.pass_threshold,
        ),
    }
}

#[cfg(test)]
mod tests;
