//! Pulling structured replies out of free-form chat output.
//!
//! Chat models rarely return bare JSON: they wrap it in prose, quote the
//! numbers, or capitalize keys. [`extract_json`] finds the first parseable
//! JSON object anywhere in a reply; the [`StructuredReply`] schemas then read
//! their fields case-insensitively with light coercion. When nothing usable
//! comes back after retries, [`complete_structured`] substitutes a typed,
//! clearly-flagged fallback instead of crashing a long run.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{BackendError, ChatBackend};

/// Placeholder text used by every parse-failure fallback.
pub const FALLBACK_TEXT: &str = "<parse-failure>";

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("reply JSON does not match the expected schema: {0}")]
    SchemaMismatch(String),
}

fn mismatch(message: impl Into<String>) -> ExtractError {
    ExtractError::SchemaMismatch(message.into())
}

/// Finds the first parseable JSON object embedded in `reply`.
///
/// Tries a streaming parse from every `{`, so braces inside string literals
/// and trailing prose are handled; truncated objects never parse and fall
/// through to [`ExtractError::NoJsonFound`].
pub fn extract_json(reply: &str) -> Result<Value, ExtractError> {
    for (offset, _) in reply.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&reply[offset..]).into_iter::<Value>();
        if let Some(Ok(value)) = stream.next() {
            if value.is_object() {
                return Ok(value);
            }
        }
    }
    Err(ExtractError::NoJsonFound)
}

/// Case-insensitive key lookup (`Answer`, `ANSWER`, `answer` all match).
fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(key))
        .map(|(_, value)| value)
}

fn required_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, ExtractError> {
    field(obj, key).ok_or_else(|| mismatch(format!("missing key {key:?}")))
}

fn as_object(value: &Value) -> Result<&Map<String, Value>, ExtractError> {
    value
        .as_object()
        .ok_or_else(|| mismatch("reply is not a JSON object"))
}

/// Accepts integers, integral floats, and numeric strings.
fn parse_integer(value: &Value, key: &str) -> Result<i64, ExtractError> {
    match value {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
            .ok_or_else(|| mismatch(format!("{key} {n} is not an integer"))),
        Value::String(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| mismatch(format!("{key} {s:?} is not an integer"))),
        other => Err(mismatch(format!("{key} has unsupported type: {other}"))),
    }
}

fn parse_scale_score(value: &Value) -> Result<u8, ExtractError> {
    let n = parse_integer(value, "score")?;
    if (1..=5).contains(&n) {
        Ok(n as u8)
    } else {
        Err(mismatch(format!("score {n} is outside 1..=5")))
    }
}

/// Free-text field; non-string or missing values degrade to an empty string
/// rather than failing the whole reply.
fn parse_text(obj: &Map<String, Value>, key: &str) -> String {
    field(obj, key)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

/// yes / no / maybe equivocation from a commentator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Maybe,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Yes => "yes",
            Self::No => "no",
            Self::Maybe => "maybe",
        }
    }

    fn parse(value: &Value) -> Result<Self, ExtractError> {
        let text = value
            .as_str()
            .ok_or_else(|| mismatch(format!("answer has unsupported type: {value}")))?;
        match text.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(Self::Yes),
            "no" => Ok(Self::No),
            "maybe" => Ok(Self::Maybe),
            other => Err(mismatch(format!("answer {other:?} is not yes/no/maybe"))),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A strict yes/no verdict label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YesNo {
    Yes,
    No,
}

impl YesNo {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Yes => "yes",
            Self::No => "no",
        }
    }

    fn parse(value: &Value) -> Result<Self, ExtractError> {
        let text = value
            .as_str()
            .ok_or_else(|| mismatch(format!("label has unsupported type: {value}")))?;
        match text.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(Self::Yes),
            "no" => Ok(Self::No),
            other => Err(mismatch(format!("label {other:?} is not yes/no"))),
        }
    }
}

impl fmt::Display for YesNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A reply schema with a typed fallback for unparseable output.
pub trait StructuredReply: Sized + Send {
    fn from_json(value: &Value) -> Result<Self, ExtractError>;

    /// The value substituted when every parse attempt fails. Always flagged
    /// via [`StructuredReply::is_fallback`].
    fn parse_failure_fallback() -> Self;

    fn is_fallback(&self) -> bool;
}

/// `{answer, score, description}` from a commentator prompt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommentatorReply {
    pub answer: Answer,
    pub score: u8,
    pub description: String,
    #[serde(skip)]
    pub from_fallback: bool,
}

impl StructuredReply for CommentatorReply {
    fn from_json(value: &Value) -> Result<Self, ExtractError> {
        let obj = as_object(value)?;
        Ok(Self {
            answer: Answer::parse(required_field(obj, "answer")?)?,
            score: parse_scale_score(required_field(obj, "score")?)?,
            description: parse_text(obj, "description"),
            from_fallback: false,
        })
    }

    fn parse_failure_fallback() -> Self {
        Self {
            answer: Answer::Maybe,
            score: 3,
            description: FALLBACK_TEXT.into(),
            from_fallback: true,
        }
    }

    fn is_fallback(&self) -> bool {
        self.from_fallback
    }
}

/// `{label, score, explanation}` from a judge-verdict prompt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeVerdictReply {
    pub label: YesNo,
    pub score: u8,
    pub explanation: String,
    #[serde(skip)]
    pub from_fallback: bool,
}

impl StructuredReply for JudgeVerdictReply {
    fn from_json(value: &Value) -> Result<Self, ExtractError> {
        let obj = as_object(value)?;
        Ok(Self {
            label: YesNo::parse(required_field(obj, "label")?)?,
            score: parse_scale_score(required_field(obj, "score")?)?,
            explanation: parse_text(obj, "explanation"),
            from_fallback: false,
        })
    }

    fn parse_failure_fallback() -> Self {
        Self {
            label: YesNo::No,
            score: 3,
            explanation: FALLBACK_TEXT.into(),
            from_fallback: true,
        }
    }

    fn is_fallback(&self) -> bool {
        self.from_fallback
    }
}

/// `{index}` from an expert-pick prompt; only 0 and 1 are valid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertPickReply {
    pub index: u8,
    #[serde(skip)]
    pub from_fallback: bool,
}

impl StructuredReply for ExpertPickReply {
    fn from_json(value: &Value) -> Result<Self, ExtractError> {
        let obj = as_object(value)?;
        let index = parse_integer(required_field(obj, "index")?, "index")?;
        if (0..=1).contains(&index) {
            Ok(Self {
                index: index as u8,
                from_fallback: false,
            })
        } else {
            Err(mismatch(format!("index {index} is outside 0..=1")))
        }
    }

    fn parse_failure_fallback() -> Self {
        Self {
            index: 0,
            from_fallback: true,
        }
    }

    fn is_fallback(&self) -> bool {
        self.from_fallback
    }
}

/// Completes `prompt` and parses a structured reply.
///
/// Parse failures re-ask the same prompt (same `sample_index`) up to
/// `max_retries` more times before returning the schema's fallback, so at most
/// `1 + max_retries` completions happen. Transport-level errors are *not*
/// retried here — the HTTP layer already did — and propagate as hard errors.
pub async fn complete_structured<R: StructuredReply>(
    backend: &dyn ChatBackend,
    prompt: &str,
    sample_index: u32,
    max_retries: u32,
) -> Result<R, BackendError> {
    for attempt in 0..=max_retries {
        let reply = backend.complete(prompt, sample_index).await?;
        match extract_json(&reply).and_then(|value| R::from_json(&value)) {
            Ok(parsed) => return Ok(parsed),
            Err(err) => {
                log::debug!("structured parse attempt {attempt} failed: {err}");
            }
        }
    }
    Ok(R::parse_failure_fallback())
}
