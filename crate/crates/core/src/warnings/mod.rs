//! Warnings: the toy BO/NPD detectors, the `.jsonl` interchange format and
//! the planted-pattern corpus generator.

pub mod detect;
pub mod io;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use detect::{detect_all, detect_bo, detect_npd};
pub use io::{load_warnings, parse_warnings, save_warnings, to_jsonl, WarningsError};
pub use synth::{synthesize_corpus, synthesize_with, Plant, SynthConfig, SynthOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VulnKind {
    #[serde(rename = "BO")]
    BufferOverflow,
    #[serde(rename = "NPD")]
    NullPointerDeref,
}

impl VulnKind {
    pub fn code(self) -> &'static str {
        match self {
            VulnKind::BufferOverflow => "BO",
            VulnKind::NullPointerDeref => "NPD",
        }
    }
}

impl FromStr for VulnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "BO" => Ok(VulnKind::BufferOverflow),
            "NPD" => Ok(VulnKind::NullPointerDeref),
            _ => Err(format!("unknown vulnerability kind `{s}` (expected BO or NPD)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "FP")]
    FalsePositive,
}

impl Label {
    pub fn is_tp(self) -> bool {
        self == Label::TruePositive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_tp() { "TP" } else { "FP" })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TP" => Ok(Label::TruePositive),
            "FP" => Ok(Label::FalsePositive),
            _ => Err(format!("invalid label `{s}` (expected TP or FP)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub id: String,
    pub file: String,
    pub function: String,
    pub line: u32,
    pub kind: VulnKind,
    pub detector: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Warning {
    pub fn key(&self) -> (&str, u32, VulnKind, &str) {
        (&self.file, self.line, self.kind, &self.detector)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub warnings: Vec<Warning>,
    pub project_of: BTreeMap<String, String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.warnings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.warnings.iter().all(|w| w.label.is_some())
    }

    pub fn project(&self, w: &Warning) -> &str {
        self.project_of.get(&w.file).map_or("", String::as_str)
    }

    /// Attaches the corpus file→project map, checking every warning's file is listed.
    pub fn attach_projects(&mut self, project_of: BTreeMap<String, String>) -> Result<(), WarningsError> {
        if let Some(w) = self.warnings.iter().find(|w| !project_of.contains_key(&w.file)) {
            return Err(WarningsError::UnknownFile { id: w.id.clone(), file: w.file.clone() });
        }
        self.project_of = project_of;
        Ok(())
    }

    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.warnings.iter().filter_map(|w| Some((w.id.clone(), w.label?))).collect()
    }

    pub fn subset(&self, keep: impl Fn(&Warning) -> bool) -> Dataset {
        Dataset {
            warnings: self.warnings.iter().filter(|w| keep(w)).cloned().collect(),
            project_of: self.project_of.clone(),
        }
    }
}
