use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("JSON object does not match schema (missing: [{}], extra: [{}])", .missing.join(", "), .extra.join(", "))]
    SchemaMismatch { missing: Vec<String>, extra: Vec<String> },
}

/// Required and optional top-level keys of an agent's answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
}

impl Schema {
    pub fn check(&self, obj: &Map<String, Value>) -> Result<(), ExtractError> {
        let missing: Vec<String> = self
            .required
            .iter()
            .filter(|k| !obj.contains_key(**k))
            .map(|k| k.to_string())
            .collect();
        let extra: Vec<String> = obj
            .keys()
            .filter(|k| !self.required.contains(&k.as_str()) && !self.optional.contains(&k.as_str()))
            .cloned()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(ExtractError::SchemaMismatch { missing, extra })
        }
    }
}

/// End index (exclusive) of the balanced object opening at `start`.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First balanced top-level JSON object in free text. Prose, code fences
/// and trailing commentary around it are ignored.
pub fn find_json_object(text: &str) -> Option<Map<String, Value>> {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(off) = text[from..].find('{') {
        let start = from + off;
        if let Some(end) = balanced_end(bytes, start) {
            if let Ok(Value::Object(m)) = serde_json::from_str(&text[start..end]) {
                return Some(m);
            }
        }
        from = start + 1;
    }
    None
}

/// [`find_json_object`] followed by a schema check.
pub fn extract_json(text: &str, schema: &Schema) -> Result<Map<String, Value>, ExtractError> {
    let obj = find_json_object(text).ok_or(ExtractError::NoJsonFound)?;
    schema.check(&obj)?;
    Ok(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENGINEER: Schema = Schema {
        required: &["circuit", "description"],
        optional: &[],
    };

    #[test]
    fn prose_around_object() {
        let text = r#"Here you go: {"circuit":"Filter(input, 3; output)","description":"..."}"#;
        let m = extract_json(text, &ENGINEER).unwrap();
        assert_eq!(m["circuit"], "Filter(input, 3; output)");
    }

    #[test]
    fn empty_object_reports_missing() {
        assert_eq!(
            extract_json("{}", &ENGINEER),
            Err(ExtractError::SchemaMismatch {
                missing: vec!["circuit".into(), "description".into()],
                extra: vec![]
            })
        );
    }

    #[test]
    fn fenced_with_trailing_commentary() {
        let text = "Sure.\n```json\n{\"circuit\": \"NOT(A; Q)\", \"description\": \"uses {braces} \\\"quoted\\\"\"}\n```\nLet me know {if} anything.";
        let m = extract_json(text, &ENGINEER).unwrap();
        assert_eq!(m["description"], "uses {braces} \"quoted\"");
    }

    #[test]
    fn skips_non_json_braces() {
        let text = r#"Set {x} first, then {"circuit":"a","description":"b","extra":1}"#;
        assert_eq!(
            extract_json(text, &ENGINEER),
            Err(ExtractError::SchemaMismatch {
                missing: vec![],
                extra: vec!["extra".into()]
            })
        );
        assert_eq!(extract_json("no json here", &ENGINEER), Err(ExtractError::NoJsonFound));
        assert_eq!(extract_json("{\"unterminated\": ", &ENGINEER), Err(ExtractError::NoJsonFound));
    }
}
