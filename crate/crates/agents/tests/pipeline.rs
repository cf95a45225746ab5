use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use fluidc_agents::pipeline::{run_logic_designer, PipelineConfig};
use fluidc_agents::project::{CIRCUIT_FILE, IO_DESIGN_FILE, REVIEW_FILE};
use fluidc_agents::{
    run_computation_cluster, run_io_designer, run_project, AgentError, ExtractError, MockTransport, ProjectStore,
    Role, PROJECT_FILES,
};
use proptest::prelude::*;
use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn mock(name: &str) -> MockTransport {
    MockTransport::from_dir(&fixtures().join("mock").join(name)).unwrap()
}

fn dg90_store() -> (tempfile::TempDir, ProjectStore) {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::new(dir.path());
    for entry in fs::read_dir(fixtures().join("projects/dg90")).unwrap() {
        let p = entry.unwrap().path();
        let file = p.file_name().unwrap().to_str().unwrap().to_string();
        store.write_raw("dg90", &file, &fs::read(&p).unwrap()).unwrap();
    }
    (dir, store)
}

fn fast() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.verifier.sim.time_scale = 0.001;
    c
}

const FIXED: &str = "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";

#[test]
fn dg90_two_rounds_end_to_end() {
    let (_dir, store) = dg90_store();
    let t = mock("dg90_two_round");
    let out = run_project(&store, "dg90", &PipelineConfig::default(), &t).unwrap();
    let c = &out.computation;
    assert_eq!(c.engineer_calls, 2);
    assert_eq!(t.calls_for("circuit_engineer"), 2);
    assert!(c.accepted);
    assert!(c.chosen.circuit.contains("NOT(A; C) NOT(B; D)"));
    assert_eq!(c.candidates[0].verifier.as_ref().unwrap().score, 2);
    assert_eq!(c.chosen.verifier.as_ref().unwrap().score, 5);

    let written = store.list("dg90").unwrap();
    assert_eq!(written, PROJECT_FILES.to_vec());
    let circuit: Value = store.read_json("dg90", CIRCUIT_FILE).unwrap().unwrap();
    assert_eq!(circuit["circuit"], FIXED);
    assert_eq!(circuit["accepted"], true);
    assert_eq!(circuit["layout"]["cost"]["overlap"], 0);
    let review: Value = store.read_json("dg90", REVIEW_FILE).unwrap().unwrap();
    assert_eq!(review["score"], 5);
    assert_eq!(review["rounds"].as_array().unwrap().len(), 2);
    let io: Value = store.read_json("dg90", IO_DESIGN_FILE).unwrap().unwrap();
    assert_eq!(io["patterns"][0]["result"]["d"], json!(8.08));
}

#[test]
fn second_engineer_request_carries_the_review() {
    let (_dir, store) = dg90_store();
    let t = mock("dg90_two_round");
    run_computation_cluster(&store.load("dg90").unwrap(), &fast(), &t).unwrap();
    let eng: Vec<_> = t.requests().into_iter().filter(|r| r.agent == "circuit_engineer").collect();
    let last = eng[1].messages.last().unwrap();
    assert_eq!(last.role, Role::User);
    assert!(last.content_str().contains("need a NOT before the OR"));
    assert!(last.content_str().contains("Automated check"));
    // Engineer keeps its conversation; its first request is a prefix of the second.
    assert_eq!(eng[1].messages[..eng[0].messages.len()], eng[0].messages[..]);
}

#[test]
fn single_round_when_first_candidate_passes() {
    let (_dir, store) = dg90_store();
    let t = mock("single_round");
    let out = run_computation_cluster(&store.load("dg90").unwrap(), &fast(), &t).unwrap();
    assert_eq!(out.engineer_calls, 1);
    assert!(out.accepted);
    assert_eq!(t.calls_for("inspector"), 1);
}

#[test]
fn prose_without_json_fails_after_one_reprompt() {
    let (_dir, store) = dg90_store();
    let t = mock("prose_only");
    let err = run_logic_designer(&store.load("dg90").unwrap(), &t).unwrap_err();
    assert!(matches!(
        err,
        AgentError::JsonExtractionFailed { ref agent, source: ExtractError::NoJsonFound } if agent == "logic_designer"
    ));
    assert_eq!(t.calls_for("logic_designer"), 2);
}

#[test]
fn verifier_vetoes_model_approval_until_rounds_run_out() {
    let (_dir, store) = dg90_store();
    let t = mock("veto_exhausted");
    let out = run_computation_cluster(&store.load("dg90").unwrap(), &fast(), &t).unwrap();
    assert!(!out.accepted);
    assert_eq!(out.engineer_calls, 3);
    assert!(out.candidates.iter().all(|c| c.model_score == Some(5) && c.score == 2));
    assert_eq!(out.chosen.round, 3);
}

#[test]
fn unparseable_circuit_forces_another_round() {
    let (_dir, store) = dg90_store();
    let t = mock("unparseable_first");
    let out = run_computation_cluster(&store.load("dg90").unwrap(), &fast(), &t).unwrap();
    assert!(!out.candidates[0].parses);
    assert_eq!(out.candidates[0].score, 1);
    assert_eq!(out.engineer_calls, 2);
    assert_eq!(t.calls_for("inspector"), 1);
    assert_eq!(out.chosen.circuit, FIXED);
}

#[test]
fn io_bend_result_reaches_the_model() {
    let (_dir, store) = dg90_store();
    let t = mock("dg90_two_round");
    let io = run_io_designer(&store.load("dg90").unwrap(), &t).unwrap();
    assert_eq!(io.patterns.len(), 1);
    let r = &io.patterns[0].result;
    assert_eq!((r["a"].clone(), r["d"].clone(), r["D"].clone(), r["n"].clone()), (json!(3.33), json!(8.08), json!(20), json!(2)));
    let second = &t.requests()[1];
    let tool_msg = second.messages.last().unwrap();
    assert_eq!(tool_msg.role, Role::Tool);
    assert!(tool_msg.content_str().contains("\"d\":8.08"));
    assert!(!tool_msg.content_str().contains("<svg"));
}

#[test]
fn io_tool_error_is_relayed_once() {
    let (_dir, store) = dg90_store();
    let project = store.load("dg90").unwrap();
    let t = mock("io_angle_error");
    let io = run_io_designer(&project, &t).unwrap();
    assert_eq!(io.patterns.len(), 1);
    assert_eq!(io.patterns[0].arguments["angle"], 45);
    let relayed = t.requests()[1].messages.last().unwrap().content_str().to_string();
    assert!(relayed.starts_with("error:") && relayed.contains("angle"));

    let err = run_io_designer(&project, &mock("io_two_errors")).unwrap_err();
    assert!(matches!(err, AgentError::ToolFailed { ref tool, .. } if tool == "Calculate_Fold"));
}

#[test]
fn io_without_tools_is_qualitative() {
    let (_dir, store) = dg90_store();
    let io = run_io_designer(&store.load("dg90").unwrap(), &mock("io_plain")).unwrap();
    assert!(io.patterns.is_empty());
    assert!(io.output_description.starts_with("For Output I"));
}

#[test]
fn missing_documents_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::new(dir.path());
    let err = run_project(&store, "empty", &fast(), &mock("single_round")).unwrap_err();
    assert!(matches!(err, AgentError::MissingDocument(f) if f == "design_goal.json"));
}

#[test]
fn identical_fixtures_give_identical_artifacts() {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let (_dir, store) = dg90_store();
        run_project(&store, "dg90", &fast(), &mock("dg90_two_round")).unwrap();
        let files: Vec<Vec<u8>> = PROJECT_FILES
            .iter()
            .map(|f| store.read_raw("dg90", f).unwrap().unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

fn msg(content: String) -> Value {
    json!({"role": "assistant", "content": content})
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn engineer_calls_never_exceed_round_limit(rounds in 1u32..6, pass_at in 1u32..8) {
        let faulty = json!({"circuit": "OR (A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)", "description": "d"});
        let fixed = json!({"circuit": FIXED, "description": "d"});
        let mut m = HashMap::new();
        m.insert("logic_designer_1".to_string(),
            fs::read_to_string(fixtures().join("mock/single_round/logic_designer_1.json")).map(|s| serde_json::from_str(&s).unwrap()).unwrap());
        for k in 1..=7 {
            let c = if k >= pass_at { &fixed } else { &faulty };
            m.insert(format!("circuit_engineer_{k}"), msg(c.to_string()));
            m.insert(format!("inspector_{k}"), msg(json!({"review": "r", "score": 5}).to_string()));
        }
        let t = MockTransport::from_map(m);
        let (_dir, store) = dg90_store();
        let mut cfg = fast();
        cfg.max_review_rounds = rounds;
        let out = run_computation_cluster(&store.load("dg90").unwrap(), &cfg, &t).unwrap();
        prop_assert!(out.engineer_calls <= rounds);
        prop_assert_eq!(t.calls_for("circuit_engineer") as u32, out.engineer_calls);
        prop_assert_eq!(out.accepted, pass_at <= rounds);
        if out.accepted {
            prop_assert_eq!(out.engineer_calls, pass_at);
            prop_assert!(fluidc_core::parse_circuit(&out.chosen.circuit).is_ok());
        }
    }
}
