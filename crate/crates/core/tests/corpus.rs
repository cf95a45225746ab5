use fluidc_core::fchdl::{parse_circuit, serialize_circuit, Netlist, OperatorKind};

mod common;

const CORPUS: &[&str] = &[
    "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)",
    "OR (A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)",
    "Filter(input, 3; output)",
    "Filter(A, 1; B);",
    "timer(A,10;B);",
    "Register(D,E;Q,iQ)",
    "Register(A,B;Q,iQ);",
    "EdgeDetector(A; Q, 0.5);",
    "NOT(NOT_A;A) EdgeDetector(A; Q, 0.5);",
    "EdgeDetector(A; Q);",
    "Multiplexer(D0, D1, D2, D3; S1, S2; Output)",
    "Demultiplexer(Input; S1, S2; D0, D1, D2, D3);",
    "Diode(A, forward; B);",
    "Diode(A, backward; B);",
    "XOR(a, b; S1) XOR(S1, cin; sum)",
];

#[test]
fn corpus_parses_cleanly() {
    for src in CORPUS {
        let n = parse_circuit(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        assert!(!n.has_errors(), "{src}: {:?}", n.diagnostics());
    }
}

#[test]
fn corpus_round_trips_through_text_and_json() {
    for src in CORPUS {
        let n = parse_circuit(src).unwrap();
        let text = serialize_circuit(&n);
        assert_eq!(parse_circuit(&text).unwrap(), n, "{src} -> {text}");
        assert_eq!(serialize_circuit(&parse_circuit(&text).unwrap()), text);
        let json = serde_json::to_string(&n).unwrap();
        let back: Netlist = serde_json::from_str(&json).unwrap();
        assert_eq!(back, n, "{json}");
    }
}

#[test]
fn full_adder_shape() {
    let n = parse_circuit(CORPUS[14]).unwrap();
    assert_eq!(n.len(), 2);
    let inputs: Vec<&str> = n.primary_inputs().iter().map(|s| s.as_str()).collect();
    assert_eq!(inputs, ["a", "b", "cin"]);
    let outputs: Vec<&str> = n.primary_outputs().iter().map(|s| s.as_str()).collect();
    assert_eq!(outputs, ["sum"]);
}

#[test]
fn edge_default_matches_explicit() {
    let a = parse_circuit("EdgeDetector(A; Q)").unwrap();
    let b = parse_circuit("EdgeDetector(A; Q, 0.5)").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.operators()[0].kind, OperatorKind::EdgeDetector);
}

mod generated {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gate_networks_round_trip(net in common::gate_net(8)) {
            let n = parse_circuit(&net.to_hdl()).unwrap();
            let text = serialize_circuit(&n);
            prop_assert_eq!(&parse_circuit(&text).unwrap(), &n);
            let back: Netlist = serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
            prop_assert_eq!(back, n);
        }

        #[test]
        fn timed_params_round_trip(t in 0.001f64..10_000.0, f in 0.01f64..50.0) {
            let src = format!("Timer(A, {t}; B) Filter(B, {f}; Output Q)");
            let n = parse_circuit(&src).unwrap();
            prop_assert_eq!(parse_circuit(&serialize_circuit(&n)).unwrap(), n);
        }
    }
}
