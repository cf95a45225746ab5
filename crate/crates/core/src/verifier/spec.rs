use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fchdl::NetName;
use crate::simulator::{Stimulus, TIME_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    #[serde(rename = "in")]
    pub inputs: BTreeMap<NetName, u8>,
    #[serde(rename = "out")]
    pub outputs: BTreeMap<NetName, u8>,
    /// Seconds to hold the inputs before sampling outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<f64>,
}

/// JSON form:
/// `{"inputs":["A","B"],"outputs":["Q"],"rows":[{"in":{"A":0,"B":0},"out":{"Q":1}}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTableSpec {
    pub inputs: Vec<NetName>,
    pub outputs: Vec<NetName>,
    pub rows: Vec<TruthRow>,
}

impl TruthTableSpec {
    /// Every input combination with outputs given by `f`, which receives the
    /// input bits in `inputs` order and returns bits in `outputs` order.
    pub fn exhaustive(inputs: &[&str], outputs: &[&str], f: impl Fn(&[u8]) -> Vec<u8>) -> Self {
        let n = inputs.len();
        let rows = (0..1u32 << n)
            .map(|code| {
                // First input is the most significant bit.
                let bits: Vec<u8> = (0..n).map(|k| ((code >> (n - 1 - k)) & 1) as u8).collect();
                let outs = f(&bits);
                TruthRow {
                    inputs: inputs.iter().map(|s| NetName::new(*s)).zip(bits).collect(),
                    outputs: outputs.iter().map(|s| NetName::new(*s)).zip(outs).collect(),
                    hold: None,
                }
            })
            .collect();
        TruthTableSpec {
            inputs: inputs.iter().map(|s| NetName::new(*s)).collect(),
            outputs: outputs.iter().map(|s| NetName::new(*s)).collect(),
            rows,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ins: BTreeSet<&NetName> = self.inputs.iter().collect();
        let outs: BTreeSet<&NetName> = self.outputs.iter().collect();
        if ins.len() != self.inputs.len() || outs.len() != self.outputs.len() {
            return Err("duplicate net in inputs or outputs".into());
        }
        if let Some(n) = ins.intersection(&outs).next() {
            return Err(format!("net `{n}` is listed as both input and output"));
        }
        if self.rows.is_empty() {
            return Err("no rows".into());
        }
        let mut seen = BTreeSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            let keys_in: BTreeSet<&NetName> = row.inputs.keys().collect();
            let keys_out: BTreeSet<&NetName> = row.outputs.keys().collect();
            if keys_in != ins {
                return Err(format!("row {i} must assign exactly the listed inputs"));
            }
            if keys_out != outs {
                return Err(format!("row {i} must assign exactly the listed outputs"));
            }
            if row.inputs.values().chain(row.outputs.values()).any(|v| *v > 1) {
                return Err(format!("row {i} has a value other than 0 or 1"));
            }
            if let Some(h) = row.hold {
                if !(h.is_finite() && h >= 0.0) {
                    return Err(format!("row {i} has an invalid hold time"));
                }
            }
            if !seen.insert((self.row_bits(row), row.hold.map(f64::to_bits))) {
                return Err(format!("row {i} repeats an earlier input assignment"));
            }
        }
        Ok(())
    }

    /// Input bits of `row` in `inputs` order.
    pub fn row_bits(&self, row: &TruthRow) -> Vec<u8> {
        self.inputs
            .iter()
            .map(|n| row.inputs.get(n).copied().unwrap_or(0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub t: f64,
    pub net: NetName,
    pub v: u8,
    /// Half-width of the acceptance window in seconds.
    pub w: f64,
}

/// A stimulus plus timed expectations:
/// `{"stimulus":[{"t":1,"net":"A","v":1}],"expect":[{"t":1.1,"net":"Q","v":1,"w":0.2}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSpec {
    #[serde(default)]
    pub stimulus: Stimulus,
    pub expect: Vec<Expectation>,
}

impl TemporalSpec {
    pub fn validate(&self, dt: f64) -> Result<(), String> {
        if self.expect.is_empty() {
            return Err("no expectations".into());
        }
        for (i, e) in self.expect.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return Err(format!("expectation {i} has an invalid time"));
            }
            if !(e.w.is_finite() && e.w >= dt - TIME_EPS) {
                return Err(format!("expectation {i} window must be at least one tick ({dt} s)"));
            }
            if e.v > 1 {
                return Err(format!("expectation {i} value must be 0 or 1"));
            }
        }
        for ev in &self.stimulus.events {
            if !(ev.t.is_finite() && ev.t >= 0.0) || ev.v > 1 {
                return Err(format!("invalid stimulus event on `{}`", ev.net));
            }
        }
        Ok(())
    }
}
