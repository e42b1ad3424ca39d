//! The `.scn.json` file format and scenario libraries.
//!
//! Every file is an envelope `{format_version, kind, body}` where `kind` is
//! one of `scenario`, `scenario_category`, `tag_trees`, or `library_index`.
//! Object graphs serialize with `$ref` reuse (see [`wire`]); a library is a
//! directory of files plus a flat `index` file mapping uid → relative path,
//! through which cross-file references resolve. The exact field layout is
//! documented in `docs/format.md` and is the compatibility contract.
//!
//! Saving is canonical: keys sorted, floats rendered shortest-round-trip,
//! two-space indentation. Equal inputs produce byte-identical files.

pub mod fixtures;
mod library;
pub mod wire;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Scenario, ScenarioCategory, ValidationReport};
use crate::tags::TagTree;

pub use fixtures::bundled_fixtures;
pub use library::{LoadedElement, Library};

/// Format version written to new files. Loaders accept any file whose major
/// version matches.
pub const FORMAT_VERSION: &str = "1.0.0";

/// Extension for all scenario files.
pub const FILE_EXTENSION: &str = ".scn.json";

/// Name of the library index file at a library root.
pub const INDEX_FILE: &str = "index";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("I/O failure on {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: format version `{found}` is not supported (accepted: {major}.x.y)")]
    VersionMismatch { path: String, found: String, major: u64 },
    #[error("{path}: expected a {expected} file, found kind `{found}`")]
    WrongKind { path: String, expected: &'static str, found: String },
    #[error("unresolved reference to uid `{uid}`")]
    UnresolvedReference { uid: String },
    #[error("duplicate uid `{uid}`")]
    DuplicateUid { uid: String },
    #[error("circular reference while loading `{path}`")]
    CircularReference { path: String },
    #[error("no library index at `{path}`")]
    MissingIndex { path: String },
    #[error("validation of `{uid}` failed:\n{report}")]
    Validation { uid: String, report: ValidationReport },
    #[error(transparent)]
    Tag(#[from] crate::tags::TagError),
}

impl PersistError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        PersistError::Io { path: path.display().to_string(), message: err.to_string() }
    }
}

/// File body, discriminated by the envelope's `kind` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum Payload {
    Scenario(wire::WireScenario),
    ScenarioCategory(wire::WireScenarioCategory),
    TagTrees(wire::WireTagTrees),
    LibraryIndex(wire::WireIndex),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Scenario(_) => "scenario",
            Payload::ScenarioCategory(_) => "scenario_category",
            Payload::TagTrees(_) => "tag_trees",
            Payload::LibraryIndex(_) => "library_index",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub format_version: String,
    #[serde(flatten)]
    pub payload: Payload,
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

/// Canonical bytes for an envelope: sorted keys (via `serde_json`'s ordered
/// maps), shortest-round-trip floats, two-space indent, trailing newline.
pub fn to_canonical_json(payload: &Payload) -> String {
    let envelope = Envelope { format_version: FORMAT_VERSION.to_owned(), payload: payload.clone() };
    let value = serde_json::to_value(&envelope).expect("envelope serialization cannot fail");
    let mut text = serde_json::to_string_pretty(&value).expect("value printing cannot fail");
    text.push('\n');
    text
}

/// Parses an envelope, checking the format version.
pub fn parse_envelope(text: &str, path: &str) -> Result<Envelope, PersistError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PersistError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| PersistError::Parse {
            path: path.to_owned(),
            line: 1,
            column: 1,
            message: "missing `format_version`".into(),
        })?
        .to_owned();
    let major = version.split('.').next().and_then(|m| m.parse::<u64>().ok());
    if major != Some(supported_major()) {
        return Err(PersistError::VersionMismatch {
            path: path.to_owned(),
            found: version,
            major: supported_major(),
        });
    }
    serde_json::from_value(value).map_err(|e| PersistError::Parse {
        path: path.to_owned(),
        line: 0,
        column: 0,
        message: e.to_string(),
    })
}

fn supported_major() -> u64 {
    FORMAT_VERSION
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .expect("FORMAT_VERSION is well-formed")
}

fn write_file(path: &Path, text: &str) -> Result<(), PersistError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PersistError::io(path, e))?;
    }
    std::fs::write(path, text).map_err(|e| PersistError::io(path, e))
}

/// Saves a scenario as a self-contained file (no external references).
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), PersistError> {
    let mut writer = wire::WireWriter::new(Default::default());
    let payload = Payload::Scenario(writer.scenario(scenario));
    write_file(path, &to_canonical_json(&payload))
}

/// Saves a scenario category as a self-contained file.
pub fn save_scenario_category(category: &ScenarioCategory, path: &Path) -> Result<(), PersistError> {
    let mut writer = wire::WireWriter::new(Default::default());
    let payload = Payload::ScenarioCategory(writer.scenario_category(category));
    write_file(path, &to_canonical_json(&payload))
}

/// Saves tag trees under a file uid.
pub fn save_tag_trees(uid: &str, name: &str, trees: &[TagTree], path: &Path) -> Result<(), PersistError> {
    let payload = Payload::TagTrees(wire::WireTagTrees {
        uid: uid.to_owned(),
        name: name.to_owned(),
        trees: trees.to_vec(),
    });
    write_file(path, &to_canonical_json(&payload))
}

/// Loads one element from a standalone file, resolving external references
/// through `library` and validating before returning.
pub fn load_element(path: &Path, library: &mut Library) -> Result<LoadedElement, PersistError> {
    library.load_external_file(path)
}

/// Loads a scenario file; errors if the file holds a different kind.
pub fn load_scenario(path: &Path, library: &mut Library) -> Result<std::sync::Arc<Scenario>, PersistError> {
    match load_element(path, library)? {
        LoadedElement::Scenario(s) => Ok(s),
        other => Err(PersistError::WrongKind {
            path: path.display().to_string(),
            expected: "scenario",
            found: other.kind().to_owned(),
        }),
    }
}

/// Loads a scenario-category file; errors if the file holds a different kind.
pub fn load_scenario_category(
    path: &Path,
    library: &mut Library,
) -> Result<std::sync::Arc<ScenarioCategory>, PersistError> {
    match load_element(path, library)? {
        LoadedElement::ScenarioCategory(c) => Ok(c),
        other => Err(PersistError::WrongKind {
            path: path.display().to_string(),
            expected: "scenario_category",
            found: other.kind().to_owned(),
        }),
    }
}
