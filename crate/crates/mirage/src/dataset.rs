//! JSONL dataset loading, validation, and serialization.
//!
//! Each line is one data point: a source text, a generated hypothesis, an
//! optional target, and (usually) gold annotations. Blank lines are skipped;
//! anything else that fails to parse or validate is a hard error carrying the
//! 1-based physical line number.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::scores::BinaryLabel;

/// Generation task a data point came from; decides which side of the pair acts
/// as the reference text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "MT")]
    Mt,
    #[serde(rename = "DM")]
    Dm,
    #[serde(rename = "PG")]
    Pg,
}

impl TaskKind {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "MT" => Some(Self::Mt),
            "DM" => Some(Self::Dm),
            "PG" => Some(Self::Pg),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mt => "MT",
            Self::Dm => "DM",
            Self::Pg => "PG",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether annotators knew which model produced the hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Track {
    #[serde(rename = "aware")]
    ModelAware,
    #[serde(rename = "agnostic")]
    ModelAgnostic,
}

impl Track {
    pub const ALL: [Track; 2] = [Track::ModelAware, Track::ModelAgnostic];

    /// Short identifier used in file names and CLI flags.
    pub fn id(self) -> &'static str {
        match self {
            Self::ModelAware => "aware",
            Self::ModelAgnostic => "agnostic",
        }
    }

    /// Human-readable name used in report headers.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::ModelAware => "Model Aware",
            Self::ModelAgnostic => "Model Agnostic",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "aware" => Some(Self::ModelAware),
            "agnostic" => Some(Self::ModelAgnostic),
            _ => None,
        }
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// One annotated generation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub id: String,
    pub task: TaskKind,
    pub src: String,
    pub hyp: String,
    pub tgt: String,
    pub gold_label: Option<BinaryLabel>,
    /// Fraction of annotators who marked the point as a hallucination.
    pub gold_p: Option<f64>,
    /// Raw per-annotator labels, carried through untouched for diagnostics.
    pub annotator_labels: Option<Value>,
}

impl DataPoint {
    /// The text the hypothesis is checked against: `tgt` for MT and DM
    /// (the source is in another language or register), `src` for PG.
    pub fn reference(&self) -> &str {
        match self.task {
            TaskKind::Mt | TaskKind::Dm => &self.tgt,
            TaskKind::Pg => &self.src,
        }
    }

    /// Whether both gold fields are present.
    pub fn has_gold(&self) -> bool {
        self.gold_label.is_some() && self.gold_p.is_some()
    }
}

/// All points of one track, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub track: Track,
    pub points: Vec<DataPoint>,
}

/// The canonical JSON field names, in serialization order.
pub const CANONICAL_FIELDS: [&str; 8] = [
    "id",
    "task",
    "src",
    "hyp",
    "tgt",
    "label",
    "p(Hallucination)",
    "labels",
];

/// Optional renaming of the physical JSON field names.
///
/// Keys are canonical names from [`CANONICAL_FIELDS`]; values are the names
/// actually present in the file. Unmapped fields keep their canonical name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldMap(pub BTreeMap<String, String>);

impl FieldMap {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for key in self.0.keys() {
            if !CANONICAL_FIELDS.contains(&key.as_str()) {
                return Err(DatasetError::UnknownCanonicalField(key.clone()));
            }
        }
        Ok(())
    }

    fn actual<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.0
            .get(canonical)
            .map(String::as_str)
            .unwrap_or(canonical)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("field map refers to unknown canonical field {0:?}")]
    UnknownCanonicalField(String),
}

fn invalid(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Invalid {
        line,
        message: message.into(),
    }
}

/// Loads a JSONL dataset with canonical field names.
pub fn load_jsonl(path: impl AsRef<Path>, track: Track) -> Result<Dataset, DatasetError> {
    load_jsonl_with(path, track, &FieldMap::default())
}

/// Loads a JSONL dataset, renaming fields through `fields` first.
pub fn load_jsonl_with(
    path: impl AsRef<Path>,
    track: Track,
    fields: &FieldMap,
) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_jsonl(&text, track, fields)
}

/// Parses JSONL text directly; line numbers refer to physical lines (1-based).
pub fn parse_jsonl(text: &str, track: Track, fields: &FieldMap) -> Result<Dataset, DatasetError> {
    fields.validate()?;
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(raw).map_err(|source| DatasetError::Json { line, source })?;
        let point = parse_point(&value, line, fields)?;
        if !seen.insert(point.id.clone()) {
            return Err(DatasetError::DuplicateId { line, id: point.id });
        }
        points.push(point);
    }
    Ok(Dataset { track, points })
}

fn parse_point(value: &Value, line: usize, fields: &FieldMap) -> Result<DataPoint, DatasetError> {
    let obj = value
        .as_object()
        .ok_or_else(|| invalid(line, "each line must be a JSON object"))?;

    let id = match optional_str(obj, fields.actual("id"), line)? {
        Some(id) if !id.is_empty() => id,
        Some(_) => return Err(invalid(line, "field \"id\" must not be empty")),
        None => format!("line-{line}"),
    };

    let task_field = fields.actual("task");
    let task_text = required_str(obj, task_field, line)?;
    let task = TaskKind::parse(&task_text).ok_or_else(|| {
        invalid(
            line,
            format!("field {task_field:?}: unsupported task {task_text:?} (expected MT, DM or PG)"),
        )
    })?;

    let src = optional_str(obj, fields.actual("src"), line)?.unwrap_or_default();
    let hyp = required_str(obj, fields.actual("hyp"), line)?;
    let tgt = optional_str(obj, fields.actual("tgt"), line)?.unwrap_or_default();

    if hyp.is_empty() {
        return Err(invalid(line, "field \"hyp\" must be a non-empty string"));
    }
    match task {
        TaskKind::Mt | TaskKind::Dm if tgt.is_empty() => {
            return Err(invalid(
                line,
                format!("field \"tgt\" must be non-empty for {task} points"),
            ));
        }
        TaskKind::Pg if src.is_empty() => {
            return Err(invalid(
                line,
                "field \"src\" must be non-empty for PG points",
            ));
        }
        _ => {}
    }

    let label_field = fields.actual("label");
    let gold_label = match obj.get(label_field) {
        None | Some(Value::Null) => None,
        Some(Value::String(text)) => Some(BinaryLabel::parse(text).ok_or_else(|| {
            invalid(
                line,
                format!("field {label_field:?}: unrecognized gold label {text:?}"),
            )
        })?),
        Some(other) => {
            return Err(invalid(
                line,
                format!("field {label_field:?} must be a string, got {other}"),
            ))
        }
    };

    let p_field = fields.actual("p(Hallucination)");
    let gold_p = match obj.get(p_field) {
        None | Some(Value::Null) => None,
        Some(value) => {
            let p = value.as_f64().ok_or_else(|| {
                invalid(
                    line,
                    format!("field {p_field:?} must be a number, got {value}"),
                )
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(
                    line,
                    format!("field {p_field:?}: {p} is outside [0, 1]"),
                ));
            }
            Some(p)
        }
    };

    let annotator_labels = obj.get(fields.actual("labels")).cloned();

    Ok(DataPoint {
        id,
        task,
        src,
        hyp,
        tgt,
        gold_label,
        gold_p,
        annotator_labels,
    })
}

fn required_str(obj: &Map<String, Value>, key: &str, line: usize) -> Result<String, DatasetError> {
    match obj.get(key) {
        Some(Value::String(text)) => Ok(text.clone()),
        Some(other) => Err(invalid(
            line,
            format!("field {key:?} must be a string, got {other}"),
        )),
        None => Err(invalid(line, format!("missing required field {key:?}"))),
    }
}

fn optional_str(
    obj: &Map<String, Value>,
    key: &str,
    line: usize,
) -> Result<Option<String>, DatasetError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(text)) => Ok(Some(text.clone())),
        Some(other) => Err(invalid(
            line,
            format!("field {key:?} must be a string, got {other}"),
        )),
    }
}

/// Serializes a dataset back to JSONL with canonical field names. Loading the
/// result reproduces the same points.
pub fn to_jsonl(dataset: &Dataset) -> String {
    let mut out = String::new();
    for point in &dataset.points {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(point.id.clone()));
        obj.insert("task".into(), Value::String(point.task.as_str().into()));
        obj.insert("src".into(), Value::String(point.src.clone()));
        obj.insert("hyp".into(), Value::String(point.hyp.clone()));
        obj.insert("tgt".into(), Value::String(point.tgt.clone()));
        if let Some(label) = point.gold_label {
            obj.insert("label".into(), Value::String(label.as_str().into()));
        }
        if let Some(p) = point.gold_p {
            obj.insert(
                "p(Hallucination)".into(),
                serde_json::Number::from_f64(p)
                    .map(Value::Number)
                    .unwrap_or(Value::Null),
            );
        }
        if let Some(labels) = &point.annotator_labels {
            obj.insert("labels".into(), labels.clone());
        }
        out.push_str(&serde_json::to_string(&Value::Object(obj)).expect("points serialize"));
        out.push('\n');
    }
    out
}
