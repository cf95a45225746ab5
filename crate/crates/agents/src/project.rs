use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::AgentError;

pub const DESIGN_GOAL_FILE: &str = "design_goal.json";
pub const INPUT_MODULE_FILE: &str = "input_module.json";
pub const OUTPUT_MODULE_FILE: &str = "output_module.json";
pub const COMPUTATION_MODULE_FILE: &str = "computation_module.json";
pub const CIRCUIT_FILE: &str = "circuit.json";
pub const REVIEW_FILE: &str = "review.json";
pub const IO_DESIGN_FILE: &str = "io_design.json";

/// Every document a project directory may hold.
pub const PROJECT_FILES: [&str; 7] = [
    DESIGN_GOAL_FILE,
    INPUT_MODULE_FILE,
    OUTPUT_MODULE_FILE,
    COMPUTATION_MODULE_FILE,
    CIRCUIT_FILE,
    REVIEW_FILE,
    IO_DESIGN_FILE,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attribute {
    Binary,
    Duration,
    Frequency,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feedback {
    #[serde(rename = "Shape-changing")]
    ShapeChanging,
    Haptic,
    Olfactory,
    Acoustic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignGoal {
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub name: String,
    pub attribute: Attribute,
    pub location: String,
    pub manipulation: String,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputModule {
    pub inputs: Vec<InputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub name: String,
    pub feedback: Feedback,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputModule {
    pub outputs: Vec<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationRule {
    pub output: String,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationModule {
    pub rules: Vec<ComputationRule>,
}

fn strip_prefix<'a>(name: &'a str, prefix: &str) -> &'a str {
    name.trim().strip_prefix(prefix).map(str::trim).unwrap_or(name.trim())
}

/// `A`, `Input A`, `AB` → canonical letters.
pub fn input_letter(name: &str) -> Option<String> {
    let s = strip_prefix(name, "Input");
    (!s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase())).then(|| s.to_string())
}

/// `I`, `Output IV` → canonical numeral.
pub fn output_numeral(name: &str) -> Option<String> {
    let s = strip_prefix(name, "Output");
    (!s.is_empty() && s.chars().all(|c| "IVXLC".contains(c))).then(|| s.to_string())
}

impl InputModule {
    pub fn validate(&self) -> Result<(), String> {
        if self.inputs.is_empty() {
            return Err("at least one input is required".into());
        }
        for i in &self.inputs {
            if input_letter(&i.name).is_none() {
                return Err(format!("input name `{}` must be a letter (A, B, ...)", i.name));
            }
        }
        Ok(())
    }
}

impl OutputModule {
    pub fn validate(&self) -> Result<(), String> {
        if self.outputs.is_empty() {
            return Err("at least one output is required".into());
        }
        for o in &self.outputs {
            if output_numeral(&o.name).is_none() {
                return Err(format!("output name `{}` must be a Roman numeral (I, II, ...)", o.name));
            }
        }
        Ok(())
    }
}

impl DesignGoal {
    pub fn validate(&self) -> Result<(), String> {
        if self.goal.trim().is_empty() {
            Err("design goal is empty".into())
        } else {
            Ok(())
        }
    }
}

impl ComputationModule {
    pub fn validate(&self) -> Result<(), String> {
        if self.rules.is_empty() {
            return Err("at least one rule is required".into());
        }
        for r in &self.rules {
            if output_numeral(&r.output).is_none() {
                return Err(format!("rule output `{}` must be a Roman numeral", r.output));
            }
        }
        Ok(())
    }
}

impl fmt::Display for InputModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .inputs
            .iter()
            .map(|i| {
                format!(
                    "Input {}, {:?}, {}, {}, {}",
                    input_letter(&i.name).unwrap_or_else(|| i.name.clone()),
                    i.attribute,
                    i.location,
                    i.manipulation,
                    i.note
                )
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

impl fmt::Display for OutputModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .outputs
            .iter()
            .map(|o| {
                let fb = serde_json::to_value(o.feedback).unwrap();
                format!(
                    "Output {}, {}, {}",
                    output_numeral(&o.name).unwrap_or_else(|| o.name.clone()),
                    fb.as_str().unwrap(),
                    o.note
                )
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

impl fmt::Display for ComputationModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .rules
            .iter()
            .map(|r| {
                format!(
                    "Output {}, {}",
                    output_numeral(&r.output).unwrap_or_else(|| r.output.clone()),
                    r.condition
                )
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Consultant-collected definition of a design.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignProject {
    pub design_goal: Option<DesignGoal>,
    pub input_module: Option<InputModule>,
    pub output_module: Option<OutputModule>,
    pub computation_module: Option<ComputationModule>,
}

/// Completion state of the four consultant phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseFlags {
    pub design_goal_flag: bool,
    pub input_module_flag: bool,
    pub output_module_flag: bool,
    pub computation_module_flag: bool,
}

impl PhaseFlags {
    pub fn all(&self) -> bool {
        self.design_goal_flag && self.input_module_flag && self.output_module_flag && self.computation_module_flag
    }

    pub fn count(&self) -> usize {
        [
            self.design_goal_flag,
            self.input_module_flag,
            self.output_module_flag,
            self.computation_module_flag,
        ]
        .iter()
        .filter(|f| **f)
        .count()
    }
}

impl DesignProject {
    pub fn flags(&self) -> PhaseFlags {
        PhaseFlags {
            design_goal_flag: self.design_goal.is_some(),
            input_module_flag: self.input_module.is_some(),
            output_module_flag: self.output_module.is_some(),
            computation_module_flag: self.computation_module.is_some(),
        }
    }

    /// Slot bindings shared by the downstream agent templates.
    pub fn bindings(&self) -> Result<Vec<(&'static str, String)>, AgentError> {
        let missing = |f: &str| AgentError::MissingDocument(f.into());
        Ok(vec![
            (
                "design_goal",
                self.design_goal.as_ref().ok_or_else(|| missing(DESIGN_GOAL_FILE))?.goal.clone(),
            ),
            (
                "input_module",
                self.input_module.as_ref().ok_or_else(|| missing(INPUT_MODULE_FILE))?.to_string(),
            ),
            (
                "output_module",
                self.output_module.as_ref().ok_or_else(|| missing(OUTPUT_MODULE_FILE))?.to_string(),
            ),
            (
                "computation_module",
                self.computation_module
                    .as_ref()
                    .ok_or_else(|| missing(COMPUTATION_MODULE_FILE))?
                    .to_string(),
            ),
        ])
    }
}

/// Project directories under one root. Writes are atomic and serialized
/// per project.
#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
    locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

fn valid_project_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

impl ProjectStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ProjectStore {
            root: root.into(),
            locks: Arc::default(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, project: &str) -> Result<PathBuf, AgentError> {
        if !valid_project_name(project) {
            return Err(AgentError::InvalidProjectName(project.into()));
        }
        Ok(self.root.join(project))
    }

    fn check_file(file: &str) -> Result<(), AgentError> {
        if PROJECT_FILES.contains(&file) {
            Ok(())
        } else {
            Err(AgentError::UnknownDocument(file.into()))
        }
    }

    fn lock(&self, project: &str) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .unwrap()
            .entry(project.to_string())
            .or_default()
            .clone()
    }

    /// Writes bytes verbatim via temp file and rename.
    pub fn write_raw(&self, project: &str, file: &str, bytes: &[u8]) -> Result<(), AgentError> {
        Self::check_file(file)?;
        let dir = self.dir(project)?;
        let lock = self.lock(project);
        let _guard = lock.lock().unwrap();
        fs::create_dir_all(&dir)?;
        let tmp = dir.join(format!(".{file}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, dir.join(file))?;
        Ok(())
    }

    pub fn read_raw(&self, project: &str, file: &str) -> Result<Option<Vec<u8>>, AgentError> {
        Self::check_file(file)?;
        let path = self.dir(project)?.join(file);
        match fs::read(path) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn write_json<T: Serialize>(&self, project: &str, file: &str, value: &T) -> Result<(), AgentError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("document serializes");
        bytes.push(b'\n');
        self.write_raw(project, file, &bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&self, project: &str, file: &str) -> Result<Option<T>, AgentError> {
        match self.read_raw(project, file)? {
            None => Ok(None),
            Some(b) => serde_json::from_slice(&b).map(Some).map_err(|e| AgentError::InvalidDocument {
                file: file.into(),
                reason: e.to_string(),
            }),
        }
    }

    /// Files present in a project, in [`PROJECT_FILES`] order.
    pub fn list(&self, project: &str) -> Result<Vec<&'static str>, AgentError> {
        let dir = self.dir(project)?;
        Ok(PROJECT_FILES.into_iter().filter(|f| dir.join(f).is_file()).collect())
    }

    pub fn load(&self, project: &str) -> Result<DesignProject, AgentError> {
        Ok(DesignProject {
            design_goal: self.read_json(project, DESIGN_GOAL_FILE)?,
            input_module: self.read_json(project, INPUT_MODULE_FILE)?,
            output_module: self.read_json(project, OUTPUT_MODULE_FILE)?,
            computation_module: self.read_json(project, COMPUTATION_MODULE_FILE)?,
        })
    }

    pub fn save(&self, project: &str, doc: &DesignProject) -> Result<(), AgentError> {
        if let Some(v) = &doc.design_goal {
            self.write_json(project, DESIGN_GOAL_FILE, v)?;
        }
        if let Some(v) = &doc.input_module {
            self.write_json(project, INPUT_MODULE_FILE, v)?;
        }
        if let Some(v) = &doc.output_module {
            self.write_json(project, OUTPUT_MODULE_FILE, v)?;
        }
        if let Some(v) = &doc.computation_module {
            self.write_json(project, COMPUTATION_MODULE_FILE, v)?;
        }
        Ok(())
    }
}

/// Checks that `bytes` is a JSON document acceptable for `file`.
pub fn validate_document(file: &str, bytes: &[u8]) -> Result<Value, AgentError> {
    let bad = |reason: String| AgentError::InvalidDocument {
        file: file.into(),
        reason,
    };
    let value: Value = serde_json::from_slice(bytes).map_err(|e| bad(e.to_string()))?;
    fn typed<T: DeserializeOwned>(v: &Value) -> Result<T, String> {
        serde_json::from_value(v.clone()).map_err(|e| e.to_string())
    }
    let res = match file {
        DESIGN_GOAL_FILE => typed::<DesignGoal>(&value).and_then(|d| d.validate()),
        INPUT_MODULE_FILE => typed::<InputModule>(&value).and_then(|d| d.validate()),
        OUTPUT_MODULE_FILE => typed::<OutputModule>(&value).and_then(|d| d.validate()),
        COMPUTATION_MODULE_FILE => typed::<ComputationModule>(&value).and_then(|d| d.validate()),
        f if PROJECT_FILES.contains(&f) => Ok(()),
        f => return Err(AgentError::UnknownDocument(f.into())),
    };
    res.map_err(bad)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_numbering_rules() {
        assert_eq!(input_letter("Input A").as_deref(), Some("A"));
        assert_eq!(input_letter("B").as_deref(), Some("B"));
        assert_eq!(input_letter("a"), None);
        assert_eq!(output_numeral("Output IV").as_deref(), Some("IV"));
        assert_eq!(output_numeral("Output 1"), None);
    }

    #[test]
    fn vocabularies_are_closed() {
        let ok = br#"{"outputs":[{"name":"I","feedback":"Shape-changing","note":"box"}]}"#;
        assert!(validate_document(OUTPUT_MODULE_FILE, ok).is_ok());
        let bad = br#"{"outputs":[{"name":"I","feedback":"Visual"}]}"#;
        assert!(validate_document(OUTPUT_MODULE_FILE, bad).is_err());
        let bad = br#"{"inputs":[{"name":"A","attribute":"Moisture","location":"x","manipulation":"y"}]}"#;
        assert!(validate_document(INPUT_MODULE_FILE, bad).is_err());
        assert!(matches!(
            validate_document("secrets.json", b"{}"),
            Err(AgentError::UnknownDocument(_))
        ));
    }

    #[test]
    fn store_rejects_traversal_and_unknown_files() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProjectStore::new(dir.path());
        assert!(store.write_raw("../x", DESIGN_GOAL_FILE, b"{}").is_err());
        assert!(store.write_raw("p", "notes.txt", b"{}").is_err());
        store.write_raw("p", REVIEW_FILE, b"{\"a\":1}").unwrap();
        assert_eq!(store.list("p").unwrap(), vec![REVIEW_FILE]);
        assert!(!dir.path().join("p").join(".review.json.tmp").exists());
        assert_eq!(store.read_raw("p", CIRCUIT_FILE).unwrap(), None);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProjectStore::new(dir.path());
        let doc = DesignProject {
            design_goal: Some(DesignGoal { goal: "g".into() }),
            input_module: Some(InputModule {
                inputs: vec![InputSpec {
                    name: "A".into(),
                    attribute: Attribute::Duration,
                    location: "heel".into(),
                    manipulation: "step".into(),
                    note: "30 min".into(),
                }],
            }),
            output_module: None,
            computation_module: None,
        };
        store.save("p", &doc).unwrap();
        assert_eq!(store.load("p").unwrap(), doc);
        assert_eq!(store.load("p").unwrap().flags().count(), 2);
    }
}
