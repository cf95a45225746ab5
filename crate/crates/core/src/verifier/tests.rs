use super::*;
use crate::simulator::Stimulus;

const DG90: &str = "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";
const DG90_UNINVERTED: &str = "OR(A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";

fn fast() -> SimConfig {
    SimConfig {
        time_scale: 0.001,
        ..Default::default()
    }
}

fn dg90_spec() -> TruthTableSpec {
    TruthTableSpec::exhaustive(&["A", "B"], &["Output I"], |b| vec![!(b[0] == 1 && b[1] == 1) as u8])
}

#[test]
fn spec_json_shape() {
    let spec: TruthTableSpec = serde_json::from_str(
        r#"{"inputs":["A","B"],"outputs":["Q"],"rows":[{"in":{"A":0,"B":0},"out":{"Q":1},"hold":2.5}]}"#,
    )
    .unwrap();
    assert_eq!(spec.rows[0].hold, Some(2.5));
    assert_eq!(spec.row_bits(&spec.rows[0]), vec![0, 0]);
    let v = serde_json::to_value(dg90_spec()).unwrap();
    assert_eq!(v["rows"][3], serde_json::json!({"in":{"A":1,"B":1},"out":{"Output I":0}}));
}

#[test]
fn spec_validation() {
    let mut spec = dg90_spec();
    spec.rows.push(spec.rows[0].clone());
    assert!(spec.validate().unwrap_err().contains("repeats"));
    let mut spec = dg90_spec();
    spec.rows[1].inputs.remove("B");
    assert!(spec.validate().is_err());
    let mut spec = dg90_spec();
    spec.rows[0].outputs.insert("Output I".into(), 2);
    assert!(spec.validate().is_err());
}

#[test]
fn corrected_dg90_is_compliant() {
    let n = parse_circuit(DG90).unwrap();
    assert!(check_truth_table(&n, &dg90_spec(), &fast()).unwrap().is_empty());
    assert!((default_hold(&n, &fast()) - 3.6).abs() < 1e-9);
}

#[test]
fn uninverted_dg90_gets_inversion_hint() {
    let n = parse_circuit(DG90_UNINVERTED).unwrap();
    let findings = check_truth_table(&n, &dg90_spec(), &fast()).unwrap();
    let rows: Vec<_> = findings.iter().filter(|f| f.location.starts_with("row")).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].message.contains("expected Output I=1, observed Output I=0"));
    let hint = findings.last().unwrap();
    assert!(
        hint.message
            .contains("inversion of Input A and Input B's condition is required"),
        "{}",
        hint.message
    );
}

#[test]
fn single_inversion_hint() {
    let n = parse_circuit("AND(A, B; Q)").unwrap();
    let spec = TruthTableSpec::exhaustive(&["A", "B"], &["Q"], |b| vec![((1 - b[0]) & b[1])]);
    let findings = check_truth_table(&n, &spec, &SimConfig::default()).unwrap();
    assert!(findings.last().unwrap().message.contains("inversion of Input A's condition"));
}

#[test]
fn unknown_and_driven_spec_nets() {
    let n = parse_circuit("NOT(A; Q)").unwrap();
    let spec = TruthTableSpec::exhaustive(&["Z"], &["Q"], |b| vec![1 - b[0]]);
    assert_eq!(
        check_truth_table(&n, &spec, &SimConfig::default()).unwrap_err(),
        VerifyError::SpecNetUnknown { net: "Z".into() }
    );
    let spec = TruthTableSpec::exhaustive(&["Q"], &["A"], |b| vec![b[0]]);
    assert!(matches!(
        check_truth_table(&n, &spec, &SimConfig::default()),
        Err(VerifyError::SpecInputNotPrimary { .. })
    ));
}

#[test]
fn temporal_spec_checks_windows() {
    let n = parse_circuit("EdgeDetector(A; Q, 0.5)").unwrap();
    let spec: TemporalSpec = serde_json::from_str(
        r#"{"stimulus":[{"t":1,"net":"A","v":1}],"expect":[{"t":1.1,"net":"Q","v":1,"w":0.2},{"t":2.0,"net":"Q","v":0,"w":0.1}]}"#,
    )
    .unwrap();
    assert!(check_temporal(&n, &spec, &SimConfig::default()).unwrap().is_empty());

    let late = TemporalSpec {
        stimulus: Stimulus::new().at(1.0, "A", 1),
        expect: vec![Expectation {
            t: 3.0,
            net: "Q".into(),
            v: 1,
            w: 0.2,
        }],
    };
    let f = check_temporal(&n, &late, &SimConfig::default()).unwrap();
    assert_eq!(f.len(), 1);
    assert!(f[0].message.contains("2.800:0"), "{}", f[0].message);
}

#[test]
fn temporal_window_must_cover_a_tick() {
    let n = parse_circuit("NOT(A; Q)").unwrap();
    let spec = TemporalSpec {
        stimulus: Stimulus::new(),
        expect: vec![Expectation {
            t: 1.0,
            net: "Q".into(),
            v: 1,
            w: 0.01,
        }],
    };
    assert!(matches!(
        check_temporal(&n, &spec, &SimConfig::default()),
        Err(VerifyError::InvalidSpec(_))
    ));
}

#[test]
fn redundant_gate_found() {
    let n = parse_circuit("NOT(A; C) NOT(A; Z) AND(C, B; Output I)").unwrap();
    assert_eq!(find_redundant(&n), vec![1]);
}

#[test]
fn rubric_tiers() {
    let c = |g, m, w| FindingCounts {
        grammar_errors: g,
        mismatches: m,
        warnings: w,
    };
    assert_eq!(score(&c(0, 0, 0)), 5);
    assert_eq!(score(&c(0, 0, 3)), 4);
    assert_eq!(score(&c(0, 1, 3)), 3);
    assert_eq!(score(&c(0, 2, 0)), 2);
    assert_eq!(score(&c(1, 0, 0)), 1);
}

#[test]
fn inspect_scores() {
    let opts = InspectOptions {
        sim: fast(),
        ..Default::default()
    };
    let good = inspect_circuit(DG90, &dg90_spec(), &opts);
    assert_eq!((good.score, good.pass), (5, true));
    assert!(good.review.starts_with("1.Truth Table:"));

    let bad = inspect_circuit(DG90_UNINVERTED, &dg90_spec(), &opts);
    assert_eq!((bad.score, bad.pass), (2, false));
    assert!(bad.review.contains("inversion of Input A and Input B"));

    let redundant = format!("{DG90} NOT(A; Z)");
    let r = inspect_circuit(&redundant, &dg90_spec(), &opts);
    assert_eq!(r.score, 4);
    assert_eq!(r.redundancy_findings.len(), 1);

    let parse_fail = inspect_circuit("NOT(A B; C)", &dg90_spec(), &opts);
    assert_eq!(parse_fail.score, 1);
    assert_eq!(parse_fail.grammar_findings[0].location, "error: byte 6");

    let shorted = inspect_circuit("NOT(A; Q) NOT(B; Q)", &dg90_spec(), &opts);
    assert_eq!(shorted.score, 1);
}

#[test]
fn diode_on_input_is_linted() {
    let n = parse_circuit("Diode(A, forward; Output Q)").unwrap();
    let spec = TruthTableSpec::exhaustive(&["A"], &["Output Q"], |b| vec![b[0]]);
    let r = inspect(&n, &spec, &InspectOptions::default());
    assert_eq!(r.other_findings.len(), 1);
    assert_eq!(r.score, 4);
}

#[test]
fn report_json_fields() {
    let r = inspect_circuit("NOT(A; Q)", &TruthTableSpec::exhaustive(&["A"], &["Q"], |b| vec![1 - b[0]]), &InspectOptions::default());
    let v = serde_json::to_value(&r).unwrap();
    for k in ["review", "score", "pass", "truth_table_findings", "grammar_findings", "redundancy_findings", "other_findings"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(r.review_json()["score"], 5);
}
