use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{Dataset, Label, VulnKind, Warning};

#[derive(Debug, Error)]
pub enum WarningsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate warning {what}")]
    DuplicateWarning { line: usize, what: String },
    #[error("warning {id}: file `{file}` is not in the corpus manifest")]
    UnknownFile { id: String, file: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWarning {
    id: String,
    file: String,
    function: String,
    line: u32,
    kind: String,
    detector: String,
    #[serde(default)]
    label: Option<String>,
}

/// Parses line-delimited JSON warnings. Blank lines are ignored.
pub fn parse_warnings(text: &str) -> Result<Dataset, WarningsError> {
    let mut warnings = Vec::new();
    let mut keys = HashSet::new();
    let mut ids = HashSet::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| WarningsError::Schema { line, message };
        let raw: RawWarning = serde_json::from_str(raw_line).map_err(|e| schema(e.to_string()))?;
        let kind: VulnKind = raw.kind.parse().map_err(schema)?;
        let label = raw.label.as_deref().map(str::parse::<Label>).transpose().map_err(schema)?;
        if raw.line == 0 {
            return Err(schema("line must be >= 1".into()));
        }
        let w = Warning {
            id: raw.id,
            file: raw.file,
            function: raw.function,
            line: raw.line,
            kind,
            detector: raw.detector,
            label,
        };
        if !ids.insert(w.id.clone()) {
            return Err(WarningsError::DuplicateWarning { line, what: format!("id `{}`", w.id) });
        }
        let key = (w.file.clone(), w.line, w.kind, w.detector.clone());
        if !keys.insert(key) {
            return Err(WarningsError::DuplicateWarning {
                line,
                what: format!("{}:{} {} {}", w.file, w.line, w.kind.code(), w.detector),
            });
        }
        warnings.push(w);
    }
    Ok(Dataset { warnings, project_of: Default::default() })
}

pub fn load_warnings(path: &Path) -> Result<Dataset, WarningsError> {
    let text = fs::read_to_string(path).map_err(|source| WarningsError::Io { path: path.to_path_buf(), source })?;
    parse_warnings(&text)
}

pub fn to_jsonl(warnings: &[Warning]) -> String {
    let mut s = String::new();
    for w in warnings {
        s.push_str(&serde_json::to_string(w).expect("warning serializes"));
        s.push('\n');
    }
    s
}

pub fn save_warnings(warnings: &[Warning], path: &Path) -> Result<(), WarningsError> {
    fs::write(path, to_jsonl(warnings)).map_err(|source| WarningsError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"id":"w1","file":"a.mc","function":"f","line":3,"kind":"BO","detector":"bo-risky-call","label":"tp"}"#;

    #[test]
    fn empty_input_is_empty_dataset() {
        assert!(parse_warnings("").unwrap().is_empty());
        assert!(parse_warnings("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn single_record_with_label_normalized() {
        let d = parse_warnings(ONE).unwrap();
        assert_eq!(d.len(), 1);
        let w = &d.warnings[0];
        assert_eq!(w.id, "w1");
        assert_eq!(w.line, 3);
        assert_eq!(w.kind, VulnKind::BufferOverflow);
        assert_eq!(w.label, Some(Label::TruePositive));
        assert!(to_jsonl(&d.warnings).contains(r#""label":"TP""#));
    }

    #[test]
    fn bad_label_names_the_line() {
        let text = format!("{ONE}\n{}", ONE.replace("w1", "w2").replace("\"line\":3", "\"line\":4").replace("tp", "maybe"));
        match parse_warnings(&text) {
            Err(WarningsError::Schema { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("maybe"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_is_schema_error() {
        assert!(matches!(parse_warnings(r#"{"id":"x"}"#), Err(WarningsError::Schema { line: 1, .. })));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{ONE}\n{}", ONE.replace("w1", "w2"));
        assert!(matches!(parse_warnings(&text), Err(WarningsError::DuplicateWarning { line: 2, .. })));
    }

    #[test]
    fn unlabeled_records_are_allowed() {
        let d = parse_warnings(&ONE.replace(r#","label":"tp""#, "")).unwrap();
        assert_eq!(d.warnings[0].label, None);
        assert!(!d.is_fully_labeled());
    }

    #[test]
    fn save_load_round_trip() {
        let d = parse_warnings(ONE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.jsonl");
        save_warnings(&d.warnings, &p).unwrap();
        assert_eq!(load_warnings(&p).unwrap(), d);
    }
}
