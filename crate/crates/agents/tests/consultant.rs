use std::path::{Path, PathBuf};

use fluidc_agents::project::PROJECT_FILES;
use fluidc_agents::{consultant_turn, DesignProject, MockTransport, NoPersist, ProjectStore, Role};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn yoga_walkthrough_matches_golden_documents() {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::new(dir.path());
    let sink = |file: &str, value: &Value| store.write_json("yoga", file, value);
    let t = MockTransport::from_dir(&fixtures().join("mock/consultant_yoga")).unwrap();

    let mut project = DesignProject::default();
    let mut history = Vec::new();
    let script = [
        ("What is a fluidic computation interface?", 0),
        ("I want a yoga pad that helps me in Triangle Pose.", 1),
        ("One sensor for the hand, one for the foot, with a short delay.", 2),
        ("Inflate a block next to the hand.", 3),
        ("Inflate it when the foot is down but the hand has not touched for 30 s.", 4),
        ("Yes, the design is finished.", 4),
    ];
    let mut last = None;
    for (message, flags_after) in script {
        let turn = consultant_turn(&mut project, &mut history, message, &t, &sink).unwrap();
        assert_eq!(turn.flags.count(), flags_after, "after {message:?}");
        assert!(turn.phase_violations.is_empty());
        last = Some(turn);
    }
    let last = last.unwrap();
    assert!(last.next_agent_requested);
    assert!(last.reply.contains("implementation agents"));
    assert_eq!(t.calls_for("consultant"), 11);

    assert_eq!(history[0].role, Role::System);
    for (i, m) in history.iter().enumerate() {
        for call in &m.tool_calls {
            let next = &history[i + 1];
            assert_eq!(next.role, Role::Tool);
            assert_eq!(next.tool_call_id.as_deref(), Some(call.id.as_str()));
        }
    }

    let golden = fixtures().join("golden/yoga");
    for file in &PROJECT_FILES[..4] {
        let want: Value = serde_json::from_slice(&std::fs::read(golden.join(file)).unwrap()).unwrap();
        let got: Value = store.read_json("yoga", file).unwrap().unwrap();
        assert_eq!(got, want, "{file}");
    }
    assert_eq!(store.load("yoga").unwrap(), project);
}

#[test]
fn no_persist_keeps_documents_in_memory() {
    let t = MockTransport::from_dir(&fixtures().join("mock/consultant_yoga")).unwrap();
    let mut project = DesignProject::default();
    let mut history = Vec::new();
    consultant_turn(&mut project, &mut history, "hello", &t, &NoPersist).unwrap();
    let turn = consultant_turn(&mut project, &mut history, "a yoga pad", &t, &NoPersist).unwrap();
    assert!(turn.flags.design_goal_flag);
    assert!(project.design_goal.unwrap().goal.starts_with("A yoga pad"));
}
