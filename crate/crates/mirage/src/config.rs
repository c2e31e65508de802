//! Run configuration: datasets, methods, and named backend presets, loaded
//! from a JSON file.
//!
//! Presets describe *how to reach* a backend (HTTP endpoint + model, or a
//! scripted mock); methods describe *what to do* with one or more presets.
//! Credentials never live in the file: each preset reads its bearer token
//! from `HARNESS_<PRESET>_TOKEN`, and `HARNESS_<PRESET>_URL` overrides the
//! configured endpoint (the preset name is uppercased, with every
//! non-alphanumeric character mapped to `_`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::http::{HttpChat, HttpEmbedding, HttpNli, HttpOptions};
use crate::backends::mock::{MockChat, MockEmbedding, MockNli, MockRule, PromptMatcher};
use crate::backends::{BackendError, ChatBackend, EmbeddingBackend, NliBackend};
use crate::dataset::{FieldMap, Track};
use crate::detectors::judge::Composition;
use crate::detectors::nli::EntailmentMode;
use crate::prompts::PromptTemplate;

/// Environment variable holding the bearer token for a preset.
pub fn token_env_var(preset: &str) -> String {
    format!("HARNESS_{}_TOKEN", env_fragment(preset))
}

/// Environment variable overriding the endpoint for a preset.
pub fn url_env_var(preset: &str) -> String {
    format!("HARNESS_{}_URL", env_fragment(preset))
}

fn env_fragment(preset: &str) -> String {
    preset
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_uppercase()
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("method {method:?} references unknown preset {preset:?}")]
    UnknownPreset { method: String, preset: String },
    #[error("method {method:?}: preset {preset:?} is a {actual} backend, expected {expected}")]
    PresetKindMismatch {
        method: String,
        preset: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("preset {preset:?}: {source}")]
    Backend {
        preset: String,
        source: BackendError,
    },
    #[error("no dataset configured for the {0} track")]
    MissingTrack(Track),
}

/// Input files per track. At least one must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub aware: Option<PathBuf>,
    pub agnostic: Option<PathBuf>,
}

fn default_llm_max_retries() -> u32 {
    2
}

fn default_truncate_chars() -> usize {
    2000
}

fn default_n_samples() -> u32 {
    3
}

fn default_true() -> bool {
    true
}

/// What a method does; `kind` selects the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodKind {
    /// Embed reference and hypothesis, score by cosine.
    Embedding { preset: String },
    /// Ask one chat model for a 1-to-5 support score.
    LlmSimilarity {
        preset: String,
        #[serde(default = "default_llm_max_retries")]
        max_retries: u32,
    },
    /// Natural-language-inference entailment, inverted into a probability.
    Nli {
        preset: String,
        #[serde(default = "default_truncate_chars")]
        truncate_chars: usize,
        #[serde(default)]
        mode: EntailmentMode,
    },
    /// Commentator/judge ensemble; `roles` maps role names to chat presets.
    Judge {
        composition: Composition,
        roles: BTreeMap<String, String>,
        #[serde(default = "default_n_samples")]
        n_samples: u32,
        #[serde(default = "default_llm_max_retries")]
        max_retries: u32,
        #[serde(default = "default_true")]
        include_question_block: bool,
    },
}

/// A named method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: MethodKind,
}

/// Optional HTTP knobs; anything unset falls back to the defaults in
/// [`HttpOptions`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HttpTuning {
    pub timeout_secs: Option<u64>,
    pub retry_base_ms: Option<u64>,
    pub max_retries: Option<u32>,
    pub concurrency: Option<usize>,
}

impl HttpTuning {
    pub fn options(&self) -> HttpOptions {
        let mut options = HttpOptions::default();
        if let Some(secs) = self.timeout_secs {
            options.timeout = Duration::from_secs(secs);
        }
        if let Some(ms) = self.retry_base_ms {
            options.retry_base = Duration::from_millis(ms);
        }
        if let Some(n) = self.max_retries {
            options.max_retries = n;
        }
        if let Some(k) = self.concurrency {
            options.concurrency = k;
        }
        options
    }
}

/// `contains` in a mock rule accepts a single string or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<String> {
        match self {
            Self::One(s) => vec![s.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// One scripted mock-chat rule: prompts containing all the needles (and
/// matching `sample_index`, when set) consume `replies` in order, with the
/// last reply repeating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRuleSpec {
    pub contains: OneOrMany,
    #[serde(default)]
    pub sample_index: Option<u32>,
    pub replies: Vec<String>,
}

/// One scripted mock-NLI entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockNliEntry {
    pub premise: String,
    pub hypothesis: String,
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

/// How to reach a backend; `kind` selects the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PresetSpec {
    HttpChat {
        model: String,
        endpoint: Option<String>,
        http: Option<HttpTuning>,
    },
    HttpEmbedding {
        model: Option<String>,
        endpoint: Option<String>,
        http: Option<HttpTuning>,
    },
    HttpNli {
        endpoint: Option<String>,
        http: Option<HttpTuning>,
    },
    MockChat {
        model: String,
        rules: Vec<MockRuleSpec>,
    },
    MockEmbedding {
        table: BTreeMap<String, Vec<f64>>,
    },
    MockNli {
        entries: Vec<MockNliEntry>,
    },
}

impl PresetSpec {
    fn kind_name(&self) -> &'static str {
        match self {
            Self::HttpChat { .. } | Self::MockChat { .. } => "chat",
            Self::HttpEmbedding { .. } | Self::MockEmbedding { .. } => "embedding",
            Self::HttpNli { .. } | Self::MockNli { .. } => "nli",
        }
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: DatasetPaths,
    #[serde(default)]
    pub field_map: FieldMap,
    #[serde(default)]
    pub prompt: Option<PromptTemplate>,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub presets: BTreeMap<String, PresetSpec>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses JSON without touching the filesystem. Paths stay as written.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file. Relative dataset and output paths are resolved
    /// against the file's own directory, so a config works from any cwd.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Self = serde_json::from_str(&text)?;
        if let Some(base) = path.parent() {
            config.anchor(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn anchor(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(p) = self.datasets.aware.as_mut() {
            rebase(p);
        }
        if let Some(p) = self.datasets.agnostic.as_mut() {
            rebase(p);
        }
        if let Some(p) = self.out_dir.as_mut() {
            rebase(p);
        }
    }

    pub fn dataset_path(&self, track: Track) -> Option<&Path> {
        match track {
            Track::ModelAware => self.datasets.aware.as_deref(),
            Track::ModelAgnostic => self.datasets.agnostic.as_deref(),
        }
    }

    /// Tracks with a dataset, aware first.
    pub fn configured_tracks(&self) -> Vec<Track> {
        Track::ALL
            .into_iter()
            .filter(|&t| self.dataset_path(t).is_some())
            .collect()
    }

    pub fn method(&self, name: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// The prompt template, with defaults for anything unset.
    pub fn prompt_template(&self) -> PromptTemplate {
        self.prompt.clone().unwrap_or_default()
    }

    fn preset_for<'a>(
        &'a self,
        method: &str,
        preset: &str,
        expected: &'static str,
    ) -> Result<&'a PresetSpec, ConfigError> {
        let spec = self
            .presets
            .get(preset)
            .ok_or_else(|| ConfigError::UnknownPreset {
                method: method.to_string(),
                preset: preset.to_string(),
            })?;
        if spec.kind_name() != expected {
            return Err(ConfigError::PresetKindMismatch {
                method: method.to_string(),
                preset: preset.to_string(),
                expected,
                actual: spec.kind_name(),
            });
        }
        Ok(spec)
    }

    /// Structural checks beyond what the JSON schema can express. `load` and
    /// `parse` call this; it is public so hand-built configs can be checked
    /// too.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.datasets.aware.is_none() && self.datasets.agnostic.is_none() {
            return Err(ConfigError::Invalid(
                "no datasets configured; set datasets.aware and/or datasets.agnostic".into(),
            ));
        }
        self.field_map
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("no methods configured".into()));
        }
        let mut names = BTreeSet::new();
        for method in &self.methods {
            let name = method.name.as_str();
            let name_ok = !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !name_ok {
                return Err(ConfigError::Invalid(format!(
                    "method name {name:?} must be non-empty and contain only \
                     ASCII letters, digits, '_' or '-'"
                )));
            }
            if !names.insert(name) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate method name {name:?}"
                )));
            }
            match &method.kind {
                MethodKind::Embedding { preset } => {
                    self.preset_for(name, preset, "embedding")?;
                }
                MethodKind::LlmSimilarity { preset, .. } => {
                    self.preset_for(name, preset, "chat")?;
                }
                MethodKind::Nli {
                    preset,
                    truncate_chars,
                    ..
                } => {
                    self.preset_for(name, preset, "nli")?;
                    if *truncate_chars == 0 {
                        return Err(ConfigError::Invalid(format!(
                            "method {name:?}: truncate_chars must be at least 1"
                        )));
                    }
                }
                MethodKind::Judge {
                    composition,
                    roles,
                    n_samples,
                    ..
                } => {
                    if *n_samples == 0 {
                        return Err(ConfigError::Invalid(format!(
                            "method {name:?}: n_samples must be at least 1"
                        )));
                    }
                    for role in composition.required_roles() {
                        let preset = roles.get(*role).ok_or_else(|| {
                            ConfigError::Invalid(format!(
                                "method {name:?}: composition {composition} needs a preset \
                                 for role {role:?}"
                            ))
                        })?;
                        self.preset_for(name, preset, "chat")?;
                    }
                }
            }
        }
        for (preset, spec) in &self.presets {
            match spec {
                PresetSpec::MockChat { rules, .. } => {
                    for (i, rule) in rules.iter().enumerate() {
                        if rule.replies.is_empty() {
                            return Err(ConfigError::Invalid(format!(
                                "preset {preset:?}: rule {i} has no replies"
                            )));
                        }
                    }
                }
                PresetSpec::MockNli { entries } => {
                    for (i, entry) in entries.iter().enumerate() {
                        let parts = [entry.entailment, entry.neutral, entry.contradiction];
                        if parts.iter().any(|v| !(0.0..=1.0).contains(v)) {
                            return Err(ConfigError::Invalid(format!(
                                "preset {preset:?}: entry {i} has a component outside [0, 1]"
                            )));
                        }
                        let sum: f64 = parts.iter().sum();
                        if (sum - 1.0).abs() > 1e-3 {
                            return Err(ConfigError::Invalid(format!(
                                "preset {preset:?}: entry {i} sums to {sum}, not 1"
                            )));
                        }
                    }
                }
                PresetSpec::MockEmbedding { table } => {
                    MockEmbedding::new(table.clone()).map_err(|source| ConfigError::Backend {
                        preset: preset.clone(),
                        source,
                    })?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Endpoint for an HTTP preset: the `HARNESS_<PRESET>_URL` environment
    /// variable wins, then the configured endpoint.
    fn resolve_endpoint(
        &self,
        preset: &str,
        configured: Option<&str>,
    ) -> Result<String, ConfigError> {
        if let Ok(url) = std::env::var(url_env_var(preset)) {
            return Ok(url);
        }
        configured.map(str::to_string).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "preset {preset:?} has no endpoint; set it in the config or via {}",
                url_env_var(preset)
            ))
        })
    }

    fn named_preset(&self, preset: &str) -> Result<&PresetSpec, ConfigError> {
        self.presets
            .get(preset)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown preset {preset:?}")))
    }

    /// Builds the chat backend behind a preset name.
    pub fn build_chat(&self, preset: &str) -> Result<Arc<dyn ChatBackend>, ConfigError> {
        match self.named_preset(preset)? {
            PresetSpec::HttpChat {
                model,
                endpoint,
                http,
            } => {
                let endpoint = self.resolve_endpoint(preset, endpoint.as_deref())?;
                let token = std::env::var(token_env_var(preset)).ok();
                let options = http.clone().unwrap_or_default().options();
                let backend =
                    HttpChat::new(&endpoint, model.clone(), token, options).map_err(|source| {
                        ConfigError::Backend {
                            preset: preset.to_string(),
                            source,
                        }
                    })?;
                Ok(Arc::new(backend))
            }
            PresetSpec::MockChat { model, rules } => {
                let mut mock = MockChat::new(model.clone());
                for spec in rules {
                    let mut rule = MockRule::texts(
                        PromptMatcher::contains(spec.contains.to_vec()),
                        spec.replies.clone(),
                    );
                    if let Some(index) = spec.sample_index {
                        rule = rule.for_sample(index);
                    }
                    mock = mock.rule(rule);
                }
                Ok(Arc::new(mock))
            }
            other => Err(ConfigError::Invalid(format!(
                "preset {preset:?} is a {} backend, expected chat",
                other.kind_name()
            ))),
        }
    }

    /// Builds the embedding backend behind a preset name.
    pub fn build_embedding(&self, preset: &str) -> Result<Arc<dyn EmbeddingBackend>, ConfigError> {
        match self.named_preset(preset)? {
            PresetSpec::HttpEmbedding {
                model,
                endpoint,
                http,
            } => {
                let endpoint = self.resolve_endpoint(preset, endpoint.as_deref())?;
                let token = std::env::var(token_env_var(preset)).ok();
                let options = http.clone().unwrap_or_default().options();
                let backend = HttpEmbedding::new(&endpoint, model.clone(), token, options)
                    .map_err(|source| ConfigError::Backend {
                        preset: preset.to_string(),
                        source,
                    })?;
                Ok(Arc::new(backend))
            }
            PresetSpec::MockEmbedding { table } => {
                let backend =
                    MockEmbedding::new(table.clone()).map_err(|source| ConfigError::Backend {
                        preset: preset.to_string(),
                        source,
                    })?;
                Ok(Arc::new(backend))
            }
            other => Err(ConfigError::Invalid(format!(
                "preset {preset:?} is a {} backend, expected embedding",
                other.kind_name()
            ))),
        }
    }

    /// Builds the NLI backend behind a preset name.
    pub fn build_nli(&self, preset: &str) -> Result<Arc<dyn NliBackend>, ConfigError> {
        match self.named_preset(preset)? {
            PresetSpec::HttpNli { endpoint, http } => {
                let endpoint = self.resolve_endpoint(preset, endpoint.as_deref())?;
                let token = std::env::var(token_env_var(preset)).ok();
                let options = http.clone().unwrap_or_default().options();
                let backend = HttpNli::new(&endpoint, token, options).map_err(|source| {
                    ConfigError::Backend {
                        preset: preset.to_string(),
                        source,
                    }
                })?;
                Ok(Arc::new(backend))
            }
            PresetSpec::MockNli { entries } => {
                let entries: Vec<(String, String, f64, f64, f64)> = entries
                    .iter()
                    .map(|e| {
                        (
                            e.premise.clone(),
                            e.hypothesis.clone(),
                            e.entailment,
                            e.neutral,
                            e.contradiction,
                        )
                    })
                    .collect();
                Ok(Arc::new(MockNli::new(entries)))
            }
            other => Err(ConfigError::Invalid(format!(
                "preset {preset:?} is a {} backend, expected nli",
                other.kind_name()
            ))),
        }
    }
}
