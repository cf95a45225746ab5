//! Discrete-time simulation of binary pneumatic signals.
//!
//! Time advances in ticks. Within a tick, stimulus events that have come due
//! are applied and then every operator is re-evaluated synchronously from the
//! previous iteration's net values until nothing changes (a Jacobi settle).
//! Sequential state (timer start, pulse start, filter edge history, register
//! bit) is only committed once the settle has converged, so transient
//! glitches inside a tick never latch.

mod trace;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fchdl::{Diagnostic, Direction, NetName, Netlist, OperatorKind, Severity};

pub use trace::{ChangeEvent, Sample, Stimulus, StimulusEvent, Trace};

/// Times closer than this are considered equal.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// Filter keeps only the newest rising edges it needs for a measurement.
const FILTER_EDGE_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Tick length in seconds.
    pub dt: f64,
    /// `None` means `max(2 * operators, 64)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_settle_iters: Option<usize>,
    /// Multiplier applied to Timer and EdgeDetector durations.
    pub time_scale: f64,
    /// Relative frequency band accepted by Filter.
    pub filter_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            max_settle_iters: None,
            time_scale: 1.0,
            filter_tolerance: 0.20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::BadConfig(m.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.max_settle_iters == Some(0) {
            return bad("max_settle_iters must be at least 1");
        }
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return bad("time_scale must be positive");
        }
        if !(self.filter_tolerance > 0.0 && self.filter_tolerance < 1.0) {
            return bad("filter_tolerance must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn settle_limit(&self, operators: usize) -> usize {
        self.max_settle_iters
            .unwrap_or_else(|| (2 * operators).max(64))
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SimError {
    #[error("netlist has structural errors: {}", .diagnostics.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    InvalidNetlist { diagnostics: Vec<Diagnostic> },
    #[error("`{net}` is not a primary input")]
    NotAnInput { net: String },
    #[error("signal value must be 0 or 1, got {value}")]
    BadValue { value: u8 },
    #[error("combinational logic did not settle at t={t}: {} still changing", .nets.join(", "))]
    Oscillation { t: f64, nets: Vec<String> },
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("invalid duration: {0}")]
    BadDuration(f64),
}

#[derive(Debug, Clone)]
struct CompiledOp {
    kind: OperatorKind,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    param: f64,
    direction: Option<Direction>,
}

/// Index-based view of a netlist used by the simulator.
#[derive(Debug)]
struct Compiled {
    net_names: Vec<NetName>,
    index: HashMap<NetName, usize>,
    is_input: Vec<bool>,
    ops: Vec<CompiledOp>,
}

impl Compiled {
    fn new(netlist: &Netlist) -> Self {
        let net_names: Vec<NetName> = netlist.nets().iter().cloned().collect();
        let index: HashMap<NetName, usize> = net_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let is_input = net_names
            .iter()
            .map(|n| netlist.primary_inputs().contains(n))
            .collect();
        let ops = netlist
            .operators()
            .iter()
            .map(|op| CompiledOp {
                kind: op.kind,
                inputs: op.inputs.iter().map(|n| index[n]).collect(),
                outputs: op.outputs.iter().map(|n| index[n]).collect(),
                param: op.param().unwrap_or(0.0),
                direction: op.direction,
            })
            .collect();
        Compiled {
            net_names,
            index,
            is_input,
            ops,
        }
    }
}

/// Per-operator sequential state.
#[derive(Debug, Clone, PartialEq)]
enum OpState {
    Stateless,
    Timer { high_since: Option<f64> },
    Edge { last_input: bool, pulse_start: Option<f64> },
    Filter { last_input: bool, rising_edges: VecDeque<f64> },
    Register { stored: bool },
}

impl OpState {
    fn initial(kind: OperatorKind) -> Self {
        match kind {
            OperatorKind::Timer => OpState::Timer { high_since: None },
            OperatorKind::EdgeDetector => OpState::Edge {
                last_input: false,
                pulse_start: None,
            },
            OperatorKind::Filter => OpState::Filter {
                last_input: false,
                rising_edges: VecDeque::new(),
            },
            OperatorKind::Register => OpState::Register { stored: false },
            _ => OpState::Stateless,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ScheduledEvent {
    t: f64,
    net: usize,
    value: bool,
}

/// Mutable simulation state: clock, net values, operator state and the
/// queue of scheduled input changes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    t: f64,
    values: Vec<bool>,
    op_state: Vec<OpState>,
    pending: VecDeque<ScheduledEvent>,
}

/// Serializable snapshot of one operator's internal state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorStateView {
    pub id: usize,
    pub kind: OperatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse_remaining: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rising_edges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stored: Option<u8>,
}

/// Serializable snapshot of a whole session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateView {
    pub t: f64,
    pub values: BTreeMap<NetName, u8>,
    pub operators: Vec<OperatorStateView>,
}

/// A live simulation over one netlist.
#[derive(Debug, Clone)]
pub struct Simulator {
    compiled: Arc<Compiled>,
    config: SimConfig,
    state: SimState,
}

/// Starts a session: every net at atmospheric pressure (0), then one settle
/// pass so gate outputs agree with the all-zero inputs.
pub fn init_session(netlist: &Netlist, config: SimConfig) -> Result<Simulator, SimError> {
    Simulator::new(netlist, config)
}

impl Simulator {
    pub fn new(netlist: &Netlist, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        if netlist.has_errors() {
            return Err(SimError::InvalidNetlist {
                diagnostics: netlist
                    .diagnostics()
                    .iter()
                    .filter(|d| d.severity == Severity::Error)
                    .cloned()
                    .collect(),
            });
        }
        let compiled = Arc::new(Compiled::new(netlist));
        let state = SimState {
            t: 0.0,
            values: vec![false; compiled.net_names.len()],
            op_state: compiled.ops.iter().map(|op| OpState::initial(op.kind)).collect(),
            pending: VecDeque::new(),
        };
        let mut sim = Simulator {
            compiled,
            config,
            state,
        };
        sim.settle()?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Current value of a net, `None` if the net does not exist.
    pub fn value(&self, net: &str) -> Option<u8> {
        self.compiled
            .index
            .get(net)
            .map(|&i| self.state.values[i] as u8)
    }

    pub fn values(&self) -> BTreeMap<NetName, u8> {
        self.compiled
            .net_names
            .iter()
            .zip(&self.state.values)
            .map(|(n, v)| (n.clone(), *v as u8))
            .collect()
    }

    pub fn view(&self) -> StateView {
        let t = self.state.t;
        let operators = self
            .compiled
            .ops
            .iter()
            .zip(&self.state.op_state)
            .enumerate()
            .map(|(id, (op, st))| {
                let mut v = OperatorStateView {
                    id,
                    kind: op.kind,
                    elapsed: None,
                    threshold: None,
                    pulse_remaining: None,
                    rising_edges: None,
                    stored: None,
                };
                match st {
                    OpState::Timer { high_since } => {
                        v.elapsed = Some(high_since.map_or(0.0, |s| round_time(t - s)));
                        v.threshold = Some(self.scaled(op.param));
                    }
                    OpState::Edge { pulse_start, .. } => {
                        let tau = self.scaled(op.param);
                        v.pulse_remaining =
                            Some(pulse_start.map_or(0.0, |s| round_time((s + tau - t).max(0.0))));
                    }
                    OpState::Filter { rising_edges, .. } => {
                        v.rising_edges = Some(rising_edges.iter().copied().collect());
                    }
                    OpState::Register { stored } => v.stored = Some(*stored as u8),
                    OpState::Stateless => {}
                }
                v
            })
            .collect();
        StateView {
            t,
            values: self.values(),
            operators,
        }
    }

    fn input_index(&self, net: &str) -> Result<usize, SimError> {
        match self.compiled.index.get(net) {
            Some(&i) if self.compiled.is_input[i] => Ok(i),
            _ => Err(SimError::NotAnInput {
                net: net.to_string(),
            }),
        }
    }

    /// Drives a primary input and settles at the current time.
    pub fn set_input(&mut self, net: &str, value: u8) -> Result<Vec<ChangeEvent>, SimError> {
        self.set_inputs(&[(net, value)])
    }

    /// Drives several primary inputs at once, then settles.
    pub fn set_inputs(&mut self, inputs: &[(&str, u8)]) -> Result<Vec<ChangeEvent>, SimError> {
        let mut resolved = Vec::with_capacity(inputs.len());
        for (net, value) in inputs {
            if *value > 1 {
                return Err(SimError::BadValue { value: *value });
            }
            resolved.push((self.input_index(net)?, *value == 1));
        }
        let before = self.state.values.clone();
        for (i, v) in resolved {
            self.state.values[i] = v;
        }
        self.settle()?;
        Ok(self.diff(&before))
    }

    /// Queues a future input change; it is applied by the first `step` whose
    /// end time reaches `t`.
    pub fn schedule(&mut self, t: f64, net: &str, value: u8) -> Result<(), SimError> {
        if value > 1 {
            return Err(SimError::BadValue { value });
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(SimError::BadDuration(t));
        }
        let net = self.input_index(net)?;
        let pos = self
            .state
            .pending
            .iter()
            .position(|e| e.t > t)
            .unwrap_or(self.state.pending.len());
        self.state.pending.insert(
            pos,
            ScheduledEvent {
                t,
                net,
                value: value == 1,
            },
        );
        Ok(())
    }

    /// Advances the clock by `dt` seconds and returns the nets that changed.
    pub fn step(&mut self, dt: f64) -> Result<Vec<ChangeEvent>, SimError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::BadDuration(dt));
        }
        let before = self.state.values.clone();
        let new_t = round_time(self.state.t + dt);
        self.apply_due(new_t);
        self.state.t = new_t;
        self.settle()?;
        Ok(self.diff(&before))
    }

    /// Applies queued events with time <= `t` without advancing the clock.
    fn apply_due(&mut self, t: f64) {
        while let Some(ev) = self.state.pending.front() {
            if ev.t > t + TIME_EPS {
                break;
            }
            let ev = self.state.pending.pop_front().expect("peeked");
            self.state.values[ev.net] = ev.value;
        }
    }

    /// Applies events already due at the current time and settles.
    pub fn flush_due(&mut self) -> Result<Vec<ChangeEvent>, SimError> {
        let before = self.state.values.clone();
        self.apply_due(self.state.t);
        self.settle()?;
        Ok(self.diff(&before))
    }

    fn diff(&self, before: &[bool]) -> Vec<ChangeEvent> {
        before
            .iter()
            .zip(&self.state.values)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, (a, b))| ChangeEvent {
                t: self.state.t,
                net: self.compiled.net_names[i].clone(),
                old: *a as u8,
                new: *b as u8,
            })
            .collect()
    }

    fn scaled(&self, seconds: f64) -> f64 {
        seconds * self.config.time_scale
    }

    fn settle(&mut self) -> Result<(), SimError> {
        let limit = self.config.settle_limit(self.compiled.ops.len());
        let mut current = self.state.values.clone();
        for _ in 0..limit {
            let next = self.evaluate(&current);
            if next == current {
                self.state.values = current;
                self.commit();
                return Ok(());
            }
            current = next;
        }
        let next = self.evaluate(&current);
        let nets = current
            .iter()
            .zip(&next)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| self.compiled.net_names[i].to_string())
            .collect();
        Err(SimError::Oscillation {
            t: self.state.t,
            nets,
        })
    }

    /// One synchronous evaluation of every operator from `values`.
    fn evaluate(&self, values: &[bool]) -> Vec<bool> {
        let mut next = values.to_vec();
        // Driven nets are recomputed from scratch; wired-OR joins accumulate.
        for op in &self.compiled.ops {
            for &o in &op.outputs {
                next[o] = false;
            }
        }
        for (op, st) in self.compiled.ops.iter().zip(&self.state.op_state) {
            let outs = self.eval_op(op, st, values);
            for (&net, v) in op.outputs.iter().zip(outs) {
                next[net] |= v;
            }
        }
        next
    }

    fn eval_op(&self, op: &CompiledOp, st: &OpState, values: &[bool]) -> Vec<bool> {
        let t = self.state.t;
        let input = |k: usize| values[op.inputs[k]];
        match op.kind {
            OperatorKind::Not => vec![!input(0)],
            OperatorKind::And => vec![input(0) && input(1)],
            OperatorKind::Or => vec![input(0) || input(1)],
            OperatorKind::Nor => vec![!(input(0) || input(1))],
            OperatorKind::Nand => vec![!(input(0) && input(1))],
            OperatorKind::Xor => vec![input(0) ^ input(1)],
            OperatorKind::Diode => match op.direction {
                Some(Direction::Forward) => vec![input(0)],
                _ => vec![false],
            },
            OperatorKind::Multiplexer => {
                let sel = 2 * input(4) as usize + input(5) as usize;
                vec![input(sel)]
            }
            OperatorKind::Demultiplexer => {
                let sel = 2 * input(1) as usize + input(2) as usize;
                (0..4).map(|k| k == sel && input(0)).collect()
            }
            OperatorKind::Register => {
                let OpState::Register { stored } = st else { unreachable!() };
                let q = if input(1) { *stored } else { input(0) };
                vec![q, !q]
            }
            OperatorKind::Timer => {
                let OpState::Timer { high_since } = st else { unreachable!() };
                let threshold = self.scaled(op.param);
                let on = input(0) && high_since.is_some_and(|s| t - s >= threshold - TIME_EPS);
                vec![on]
            }
            OperatorKind::EdgeDetector => {
                let OpState::Edge { last_input, pulse_start } = st else { unreachable!() };
                let tau = self.scaled(op.param);
                let rising = input(0) && !last_input;
                let active = pulse_start.is_some_and(|s| t < s + tau - TIME_EPS);
                vec![rising || active]
            }
            OperatorKind::Filter => {
                let OpState::Filter { last_input, rising_edges } = st else { unreachable!() };
                let rising = input(0) && !last_input;
                let mut edges: Vec<f64> = rising_edges.iter().copied().collect();
                if rising {
                    edges.push(t);
                }
                vec![self.filter_locked(op.param, &edges, t)]
            }
        }
    }

    /// Frequency lock: three rising edges whose spacing matches the target
    /// within tolerance, and the newest one recent enough.
    fn filter_locked(&self, target_hz: f64, edges: &[f64], t: f64) -> bool {
        if edges.len() < FILTER_EDGE_WINDOW {
            return false;
        }
        let newest = edges[edges.len() - 1];
        let third = edges[edges.len() - FILTER_EDGE_WINDOW];
        let span = newest - third;
        if span <= TIME_EPS {
            return false;
        }
        let measured = 2.0 / span;
        (measured - target_hz).abs() <= self.config.filter_tolerance * target_hz + TIME_EPS
            && t - newest <= 1.5 / target_hz + TIME_EPS
    }

    /// Latches sequential state from the settled net values.
    fn commit(&mut self) {
        let t = self.state.t;
        let values = &self.state.values;
        for (op, st) in self.compiled.ops.iter().zip(self.state.op_state.iter_mut()) {
            let input = values[op.inputs[0]];
            match st {
                OpState::Stateless => {}
                OpState::Timer { high_since } => {
                    *high_since = if input { high_since.or(Some(t)) } else { None };
                }
                OpState::Edge { last_input, pulse_start } => {
                    if input && !*last_input {
                        *pulse_start = Some(t);
                    }
                    *last_input = input;
                }
                OpState::Filter { last_input, rising_edges } => {
                    if input && !*last_input {
                        rising_edges.push_back(t);
                        while rising_edges.len() > FILTER_EDGE_WINDOW {
                            rising_edges.pop_front();
                        }
                    }
                    *last_input = input;
                }
                OpState::Register { stored } => {
                    *stored = values[op.outputs[0]];
                }
            }
        }
    }
}

/// Snaps a time to nanosecond resolution so repeated `dt` additions stay
/// on the decimal grid.
pub(crate) fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// Runs a stimulus against a fresh session until `until` seconds, sampling
/// every tick.
pub fn run(
    netlist: &Netlist,
    stimulus: &Stimulus,
    until: f64,
    config: SimConfig,
) -> Result<Trace, SimError> {
    if !(until.is_finite() && until > 0.0) {
        return Err(SimError::BadDuration(until));
    }
    let mut sim = Simulator::new(netlist, config)?;
    for ev in stimulus.sorted_events() {
        sim.schedule(ev.t, ev.net.as_str(), ev.v)?;
    }
    let dt = sim.config.dt;
    let mut trace = Trace::default();
    trace.events.extend(sim.flush_due()?);
    trace.samples.push(Sample {
        t: sim.time(),
        values: sim.values(),
    });
    while sim.time() < until - TIME_EPS {
        let events = sim.step(dt)?;
        trace.events.extend(events);
        trace.samples.push(Sample {
            t: sim.time(),
            values: sim.values(),
        });
    }
    Ok(trace)
}
