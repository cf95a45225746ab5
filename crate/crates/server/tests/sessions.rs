use std::sync::Arc;
use std::time::Duration;

use fluidc_core::parse_circuit;
use fluidc_core::simulator::{SimConfig, Simulator};
use fluidc_server::SessionManager;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Set(usize, u8),
    Step(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..2, 0u8..=1).prop_map(|(i, v)| Op::Set(i, v)),
        (1u32..20).prop_map(|k| Op::Step(k as f64 * 0.1)),
    ]
}

const CIRCUIT: &str = "NAND(A, B; C) Timer(C, 0.3; Q)";
const INPUTS: [&str; 2] = ["A", "B"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Interleaved operations on two sessions leave each one exactly where a
    /// private simulator given only its own operations ends up.
    #[test]
    fn sessions_are_isolated(ops in prop::collection::vec((any::<bool>(), op()), 0..40)) {
        let netlist = parse_circuit(CIRCUIT).unwrap();
        let m = Arc::new(SessionManager::new(Duration::from_secs(60)));
        let sessions = [
            m.create(&netlist, SimConfig::default(), false).unwrap(),
            m.create(&netlist, SimConfig::default(), false).unwrap(),
        ];
        let mut oracles = [
            Simulator::new(&netlist, SimConfig::default()).unwrap(),
            Simulator::new(&netlist, SimConfig::default()).unwrap(),
        ];
        for (which, op) in &ops {
            let k = *which as usize;
            match op {
                Op::Set(i, v) => {
                    sessions[k].set_input(INPUTS[*i], *v).unwrap();
                    oracles[k].set_input(INPUTS[*i], *v).unwrap();
                }
                Op::Step(dt) => {
                    sessions[k].step(*dt).unwrap();
                    oracles[k].step(*dt).unwrap();
                }
            }
        }
        for k in 0..2 {
            let got = serde_json::to_value(sessions[k].state()).unwrap();
            let want = serde_json::to_value(oracles[k].view()).unwrap();
            prop_assert_eq!(got, want);
        }
    }
}
