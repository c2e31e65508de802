//! Deterministic scripted backends for tests, examples, and offline runs.
//!
//! Scripts are plain data: a chat mock is a list of rules, an embedding mock a
//! text→vector table, an NLI mock a pair→distribution table. Identical runs
//! replay identical sequences, and anything unscripted is a hard error so a
//! fixture can't silently drift out of sync with the code under test.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;

use super::{BackendError, ChatBackend, EmbeddingBackend, NliBackend, NliTriple};

fn snippet(text: &str) -> String {
    const LIMIT: usize = 120;
    if text.chars().count() <= LIMIT {
        text.to_string()
    } else {
        let head: String = text.chars().take(LIMIT).collect();
        format!("{head}…")
    }
}

/// One recorded chat request, in global arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatCall {
    pub model: String,
    pub prompt: String,
    pub sample_index: u32,
}

/// A shared log of chat calls. Clones share the same buffer, so one log handed
/// to several backends observes the global ordering across all of them —
/// which is what happens-before assertions in tests key on.
#[derive(Debug, Clone, Default)]
pub struct CallLog(Arc<Mutex<Vec<ChatCall>>>);

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, call: ChatCall) {
        self.0.lock().expect("call log poisoned").push(call);
    }

    pub fn calls(&self) -> Vec<ChatCall> {
        self.0.lock().expect("call log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("call log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a rule decides whether it applies to a prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum PromptMatcher {
    /// Matches every prompt.
    Any,
    /// Matches prompts containing every listed substring.
    Contains(Vec<String>),
    /// Matches the prompt byte for byte.
    Exact(String),
}

impl PromptMatcher {
    pub fn contains<I, S>(needles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::Contains(needles.into_iter().map(Into::into).collect())
    }

    fn matches(&self, prompt: &str) -> bool {
        match self {
            Self::Any => true,
            Self::Contains(needles) => needles.iter().all(|n| prompt.contains(n.as_str())),
            Self::Exact(text) => prompt == text,
        }
    }
}

/// A scripted reply: either text or a simulated transport failure.
#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Text(String),
    TransportError(String),
}

/// Scripted behaviour for prompts matching `matcher` (and `sample_index`, when
/// set). Replies are consumed in order per rule; once exhausted, the last
/// reply repeats.
#[derive(Debug, Clone)]
pub struct MockRule {
    pub matcher: PromptMatcher,
    pub sample_index: Option<u32>,
    pub replies: Vec<MockReply>,
}

impl MockRule {
    pub fn new(matcher: PromptMatcher, replies: Vec<MockReply>) -> Self {
        Self {
            matcher,
            sample_index: None,
            replies,
        }
    }

    /// Single text reply, repeated forever.
    pub fn text(matcher: PromptMatcher, reply: impl Into<String>) -> Self {
        Self::new(matcher, vec![MockReply::Text(reply.into())])
    }

    /// A sequence of text replies.
    pub fn texts<I, S>(matcher: PromptMatcher, replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            matcher,
            replies
                .into_iter()
                .map(|r| MockReply::Text(r.into()))
                .collect(),
        )
    }

    /// Restricts the rule to one sample index.
    pub fn for_sample(mut self, sample_index: u32) -> Self {
        self.sample_index = Some(sample_index);
        self
    }
}

/// A scripted [`ChatBackend`]. The first matching rule wins.
pub struct MockChat {
    model: String,
    rules: Vec<MockRule>,
    consumed: Mutex<Vec<usize>>,
    log: CallLog,
}

impl MockChat {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            rules: Vec::new(),
            consumed: Mutex::new(Vec::new()),
            log: CallLog::new(),
        }
    }

    /// Shares an external call log (usually across several backends).
    pub fn with_log(mut self, log: CallLog) -> Self {
        self.log = log;
        self
    }

    pub fn rule(mut self, rule: MockRule) -> Self {
        self.rules.push(rule);
        self.consumed
            .get_mut()
            .expect("consumed counters poisoned")
            .push(0);
        self
    }

    pub fn log(&self) -> &CallLog {
        &self.log
    }
}

#[async_trait]
impl ChatBackend for MockChat {
    fn model_name(&self) -> &str {
        &self.model
    }

    async fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, BackendError> {
        self.log.record(ChatCall {
            model: self.model.clone(),
            prompt: prompt.to_string(),
            sample_index,
        });
        let position = self
            .rules
            .iter()
            .position(|rule| {
                rule.sample_index.is_none_or(|s| s == sample_index) && rule.matcher.matches(prompt)
            })
            .ok_or_else(|| {
                BackendError::UnscriptedRequest(format!(
                    "model {:?}, sample {sample_index}, prompt {:?}",
                    self.model,
                    snippet(prompt)
                ))
            })?;
        let rule = &self.rules[position];
        let cursor = {
            let mut consumed = self.consumed.lock().expect("consumed counters poisoned");
            let cursor = consumed[position];
            consumed[position] += 1;
            cursor
        };
        let reply = rule
            .replies
            .get(cursor)
            .or_else(|| rule.replies.last())
            .ok_or_else(|| BackendError::Configuration("mock rule has no replies".into()))?;
        match reply {
            MockReply::Text(text) => Ok(text.clone()),
            MockReply::TransportError(message) => Err(BackendError::Transport(message.clone())),
        }
    }
}

/// A table-driven [`EmbeddingBackend`]. All vectors must share one nonzero
/// dimensionality; unknown text is a hard error.
#[derive(Debug)]
pub struct MockEmbedding {
    table: HashMap<String, Vec<f64>>,
}

impl MockEmbedding {
    pub fn new<I, S>(entries: I) -> Result<Self, BackendError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let table: HashMap<String, Vec<f64>> =
            entries.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let mut dimension = None;
        for (text, vector) in &table {
            if vector.is_empty() {
                return Err(BackendError::Configuration(format!(
                    "embedding for {:?} is empty",
                    snippet(text)
                )));
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(BackendError::Configuration(format!(
                    "embedding for {:?} has a non-finite component",
                    snippet(text)
                )));
            }
            match dimension {
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(BackendError::Configuration(format!(
                        "embedding dimensions disagree: {} vs {}",
                        d,
                        vector.len()
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { table })
    }
}

#[async_trait]
impl EmbeddingBackend for MockEmbedding {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        self.table.get(text).cloned().ok_or_else(|| {
            BackendError::UnscriptedRequest(format!("no embedding for text {:?}", snippet(text)))
        })
    }
}

/// A table-driven [`NliBackend`] keyed on `(premise, hypothesis)`, recording
/// every call so tests can assert argument orientation.
pub struct MockNli {
    table: HashMap<(String, String), (f64, f64, f64)>,
    calls: Mutex<Vec<(String, String)>>,
}

impl MockNli {
    /// Entries are `(premise, hypothesis, entailment, neutral, contradiction)`.
    /// Distributions are validated on receipt, exactly like wire payloads.
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, S, f64, f64, f64)>,
        S: Into<String>,
    {
        Self {
            table: entries
                .into_iter()
                .map(|(p, h, e, n, c)| ((p.into(), h.into()), (e, n, c)))
                .collect(),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(String, String)> {
        self.calls.lock().expect("nli call log poisoned").clone()
    }
}

#[async_trait]
impl NliBackend for MockNli {
    async fn infer(&self, premise: &str, hypothesis: &str) -> Result<NliTriple, BackendError> {
        self.calls
            .lock()
            .expect("nli call log poisoned")
            .push((premise.to_string(), hypothesis.to_string()));
        let (e, n, c) = self
            .table
            .get(&(premise.to_string(), hypothesis.to_string()))
            .copied()
            .ok_or_else(|| {
                BackendError::UnscriptedRequest(format!(
                    "no NLI entry for premise {:?} / hypothesis {:?}",
                    snippet(premise),
                    snippet(hypothesis)
                ))
            })?;
        NliTriple::new(e, n, c)
    }
}
