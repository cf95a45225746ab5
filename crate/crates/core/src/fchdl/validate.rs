use std::collections::{BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::{Direction, NetName, Netlist, OperatorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    MultipleDrivers,
    DanglingNet,
    UnreachableOperator,
    CombinationalCycle,
    SelfLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nets: Vec<NetName>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<usize>,
}

/// Structural checks over a parsed netlist. Only `MultipleDrivers` is an
/// error; everything else is a warning the simulator can live with.
pub fn validate_netlist(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let ops = netlist.operators();

    for net in netlist.nets() {
        let drivers = netlist.drivers(net);
        if drivers.len() > 1 {
            let wired_or = drivers.iter().all(|&d| {
                ops[d].kind == OperatorKind::Diode && ops[d].direction == Some(Direction::Forward)
            });
            if !wired_or {
                out.push(Diagnostic {
                    kind: DiagnosticKind::MultipleDrivers,
                    severity: Severity::Error,
                    message: format!(
                        "net `{net}` is driven by {} operators; only forward diodes may share an output line",
                        drivers.len()
                    ),
                    nets: vec![net.clone()],
                    operators: drivers.to_vec(),
                });
            }
        }
        if !drivers.is_empty()
            && netlist.consumers(net).is_empty()
            && !netlist.primary_outputs().contains(net)
        {
            out.push(Diagnostic {
                kind: DiagnosticKind::DanglingNet,
                severity: Severity::Warning,
                message: format!("net `{net}` is driven but never used"),
                nets: vec![net.clone()],
                operators: drivers.to_vec(),
            });
        }
    }

    for id in unreachable_operators(netlist) {
        out.push(Diagnostic {
            kind: DiagnosticKind::UnreachableOperator,
            severity: Severity::Warning,
            message: format!(
                "operator {id} ({}) does not contribute to any output",
                ops[id].kind
            ),
            nets: Vec::new(),
            operators: vec![id],
        });
    }

    for op in ops {
        if let Some(net) = op.outputs.iter().find(|o| op.inputs.contains(o)) {
            out.push(Diagnostic {
                kind: DiagnosticKind::SelfLoop,
                severity: Severity::Warning,
                message: format!("operator {} ({}) feeds `{net}` back into itself", op.id, op.kind),
                nets: vec![net.clone()],
                operators: vec![op.id],
            });
        }
    }

    for cycle in combinational_cycles(netlist) {
        let kinds: Vec<String> = cycle.iter().map(|&i| format!("{}#{i}", ops[i].kind)).collect();
        out.push(Diagnostic {
            kind: DiagnosticKind::CombinationalCycle,
            severity: Severity::Warning,
            message: format!("combinational feedback loop through {}", kinds.join(" -> ")),
            nets: Vec::new(),
            operators: cycle,
        });
    }
    out
}

/// Operators with no directed path to a primary output.
pub(crate) fn unreachable_operators(netlist: &Netlist) -> Vec<usize> {
    let ops = netlist.operators();
    let mut live = vec![false; ops.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for net in netlist.primary_outputs() {
        for &d in netlist.drivers(net) {
            if !live[d] {
                live[d] = true;
                queue.push_back(d);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        for net in &ops[id].inputs {
            for &d in netlist.drivers(net) {
                if !live[d] {
                    live[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    live.iter()
        .enumerate()
        .filter(|(_, l)| !**l)
        .map(|(i, _)| i)
        .collect()
}

/// Strongly connected groups of two or more combinational operators.
fn combinational_cycles(netlist: &Netlist) -> Vec<Vec<usize>> {
    let ops = netlist.operators();
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = ops.iter().map(|op| graph.add_node(op.id)).collect();
    for op in ops.iter().filter(|o| o.kind.is_combinational()) {
        let targets: BTreeSet<usize> = op
            .outputs
            .iter()
            .flat_map(|n| netlist.consumers(n).iter().copied())
            .filter(|&c| c != op.id && ops[c].kind.is_combinational())
            .collect();
        for t in targets {
            graph.add_edge(nodes[op.id], nodes[t], ());
        }
    }
    let mut cycles: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut ids: Vec<usize> = scc.into_iter().map(|n| graph[n]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    cycles.sort();
    cycles
}
