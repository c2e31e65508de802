//! Orchestration: score methods over datasets, persist verdicts, evaluate
//! verdict files into a report.
//!
//! `run` is exactly `score` for every configured method and track followed by
//! `evaluate` on the files written — no private shortcut.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{SecondsFormat, Utc};
use futures::stream::{self, StreamExt, TryStreamExt};
use thiserror::Error;

use crate::config::{ConfigError, MethodKind, RunConfig};
use crate::dataset::{load_jsonl_with, Dataset, DatasetError, Track};
use crate::detectors::judge::{run_composition, JudgeOptions};
use crate::detectors::nli::{score_nli, NliOptions};
use crate::detectors::similarity::{score_embedding, score_llm};
use crate::detectors::DetectorError;
use crate::eval::{
    evaluate, DatasetDigest, EvalError, EvaluationReport, MethodResult, RunManifest,
    SPEARMAN_VARIANT,
};
use crate::scores::DetectorVerdict;

/// Points scored in flight per method.
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("method {method:?}: {source}")]
    Detector {
        method: String,
        source: DetectorError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("verdict file {path}: {message}")]
    VerdictFile { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code: 2 for hard backend failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Detector { source, .. } if source.is_backend() => 2,
            _ => 1,
        }
    }
}

/// Loads the dataset configured for a track, applying the config's field map.
pub fn load_track(config: &RunConfig, track: Track) -> Result<Dataset, RunError> {
    let path = config
        .dataset_path(track)
        .ok_or(ConfigError::MissingTrack(track))?;
    Ok(load_jsonl_with(path, track, &config.field_map)?)
}

async fn run_pool<'a, F, Fut>(
    dataset: &'a Dataset,
    concurrency: usize,
    make: F,
) -> Result<Vec<DetectorVerdict>, DetectorError>
where
    F: FnMut(&'a crate::dataset::DataPoint) -> Fut,
    Fut: std::future::Future<Output = Result<DetectorVerdict, DetectorError>>,
{
    stream::iter(dataset.points.iter().map(make))
        .buffered(concurrency)
        .try_collect()
        .await
}

/// Scores one method over one dataset. Points are scored concurrently
/// ([`DEFAULT_CONCURRENCY`] in flight) and verdicts come back in dataset
/// order.
pub async fn score_method(
    config: &RunConfig,
    method_name: &str,
    dataset: &Dataset,
) -> Result<Vec<DetectorVerdict>, RunError> {
    let method = config
        .method(method_name)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown method {method_name:?}")))?;
    let detector = |source| RunError::Detector {
        method: method_name.to_string(),
        source,
    };
    match &method.kind {
        MethodKind::Embedding { preset } => {
            let backend = config.build_embedding(preset)?;
            run_pool(dataset, DEFAULT_CONCURRENCY, |point| {
                let backend = Arc::clone(&backend);
                async move { score_embedding(backend.as_ref(), point).await }
            })
            .await
            .map_err(detector)
        }
        MethodKind::LlmSimilarity {
            preset,
            max_retries,
        } => {
            let backend = config.build_chat(preset)?;
            let template = config.prompt_template();
            let max_retries = *max_retries;
            run_pool(dataset, DEFAULT_CONCURRENCY, |point| {
                let backend = Arc::clone(&backend);
                let template = template.clone();
                async move { score_llm(backend.as_ref(), &template, point, max_retries).await }
            })
            .await
            .map_err(detector)
        }
        MethodKind::Nli {
            preset,
            truncate_chars,
            mode,
        } => {
            let backend = config.build_nli(preset)?;
            let options = NliOptions {
                truncate_chars: *truncate_chars,
                mode: *mode,
            };
            run_pool(dataset, DEFAULT_CONCURRENCY, |point| {
                let backend = Arc::clone(&backend);
                let options = options.clone();
                async move { score_nli(backend.as_ref(), point, &options).await }
            })
            .await
            .map_err(detector)
        }
        MethodKind::Judge {
            composition,
            roles,
            n_samples,
            max_retries,
            include_question_block,
        } => {
            let mut backends: HashMap<String, Arc<dyn crate::backends::ChatBackend>> =
                HashMap::new();
            for (role, preset) in roles {
                backends.insert(role.clone(), config.build_chat(preset)?);
            }
            let backends = Arc::new(backends);
            let options = JudgeOptions {
                n_samples: *n_samples,
                max_retries: *max_retries,
                include_question_block: *include_question_block,
                template: config.prompt_template(),
            };
            let composition = *composition;
            run_pool(dataset, DEFAULT_CONCURRENCY, |point| {
                let backends = Arc::clone(&backends);
                let options = options.clone();
                async move { run_composition(composition, &backends, point, &options).await }
            })
            .await
            .map_err(detector)
        }
    }
}

/// `<method>.<track-id>.verdicts.jsonl`
pub fn verdict_file_name(method: &str, track: Track) -> String {
    format!("{method}.{}.verdicts.jsonl", track.id())
}

/// Recovers `(method, track)` from a verdict file name.
pub fn parse_verdict_file_name(path: &Path) -> Result<(String, Track), RunError> {
    let bad = |message: &str| RunError::VerdictFile {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| bad("not a utf-8 file name"))?;
    let stem = name
        .strip_suffix(".verdicts.jsonl")
        .ok_or_else(|| bad("expected a name like <method>.<track>.verdicts.jsonl"))?;
    let (method, track_id) = stem
        .rsplit_once('.')
        .ok_or_else(|| bad("expected a name like <method>.<track>.verdicts.jsonl"))?;
    if method.is_empty() {
        return Err(bad("empty method name"));
    }
    let track = Track::parse(track_id).ok_or_else(|| {
        bad(&format!(
            "unknown track {track_id:?} (use aware or agnostic)"
        ))
    })?;
    Ok((method.to_string(), track))
}

/// Writes one verdict per line.
pub fn write_verdicts(path: &Path, verdicts: &[DetectorVerdict]) -> Result<(), RunError> {
    let io = |context: String| move |source| RunError::Io { context, source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io(format!("create {}", parent.display())))?;
        }
    }
    let mut out = String::new();
    for verdict in verdicts {
        let line = serde_json::to_string(verdict).map_err(|e| RunError::VerdictFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io(format!("write {}", path.display())))
}

/// Reads a verdict file back, checking each line's label against its
/// probability.
pub fn read_verdicts(path: &Path) -> Result<Vec<DetectorVerdict>, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        context: format!("read {}", path.display()),
        source,
    })?;
    let mut verdicts = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let verdict: DetectorVerdict =
            serde_json::from_str(line).map_err(|e| RunError::VerdictFile {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", index + 1),
            })?;
        if !verdict.is_consistent() {
            return Err(RunError::VerdictFile {
                path: path.to_path_buf(),
                message: format!(
                    "line {}: label {} disagrees with probability {}",
                    index + 1,
                    verdict.label,
                    verdict.p
                ),
            });
        }
        verdicts.push(verdict);
    }
    Ok(verdicts)
}

/// Scores one method on one track and writes the verdict file into `out_dir`.
/// Returns the file's path.
pub async fn cmd_score(
    config: &RunConfig,
    method_name: &str,
    track: Track,
    out_dir: &Path,
) -> Result<PathBuf, RunError> {
    let dataset = load_track(config, track)?;
    let verdicts = score_method(config, method_name, &dataset).await?;
    let path = out_dir.join(verdict_file_name(method_name, track));
    write_verdicts(&path, &verdicts)?;
    Ok(path)
}

/// Evaluates verdict files against their tracks' datasets and writes
/// `report.md`, `report.csv`, and `report.json` into `out_dir`.
pub fn cmd_evaluate(
    config: &RunConfig,
    verdict_files: &[PathBuf],
    out_dir: &Path,
) -> Result<EvaluationReport, RunError> {
    let mut datasets: BTreeMap<Track, Dataset> = BTreeMap::new();
    let mut results: Vec<MethodResult> = Vec::new();
    let mut excluded: BTreeMap<String, usize> = BTreeMap::new();
    for file in verdict_files {
        let (method, track) = parse_verdict_file_name(file)?;
        if let std::collections::btree_map::Entry::Vacant(slot) = datasets.entry(track) {
            slot.insert(load_track(config, track)?);
        }
        let dataset = &datasets[&track];
        let verdicts = read_verdicts(file)?;
        let evaluation = evaluate(&verdicts, dataset, &method)?;
        if evaluation.excluded_missing_gold > 0 {
            excluded.insert(
                format!("{method}.{}", track.id()),
                evaluation.excluded_missing_gold,
            );
        }
        results.push(evaluation.result);
    }
    let mut digests = BTreeMap::new();
    for (track, dataset) in &datasets {
        let path = config
            .dataset_path(*track)
            .ok_or(ConfigError::MissingTrack(*track))?;
        let digest =
            DatasetDigest::for_file(path, dataset.points.len()).map_err(|source| RunError::Io {
                context: format!("digest {}", path.display()),
                source,
            })?;
        digests.insert(track.id().to_string(), digest);
    }
    let manifest = RunManifest {
        created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        spearman: SPEARMAN_VARIANT.to_string(),
        config: serde_json::to_value(config).map_err(|e| EvalError::Json(e.to_string()))?,
        datasets: digests,
        excluded_missing_gold: excluded,
    };
    let report = EvaluationReport::new(manifest, results)?;
    write_report_files(&report, out_dir)?;
    Ok(report)
}

fn write_report_files(report: &EvaluationReport, out_dir: &Path) -> Result<(), RunError> {
    use crate::eval::{render_report, ReportFormat};
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        context: format!("create {}", out_dir.display()),
        source,
    })?;
    let pairs = [
        ("report.md", ReportFormat::Markdown),
        ("report.csv", ReportFormat::Csv),
        ("report.json", ReportFormat::Json),
    ];
    for (name, format) in pairs {
        let rendered = render_report(report, format)?;
        let path = out_dir.join(name);
        std::fs::write(&path, rendered).map_err(|source| RunError::Io {
            context: format!("write {}", path.display()),
            source,
        })?;
    }
    Ok(())
}

/// Scores every configured method on every configured track, then evaluates
/// the verdict files it just wrote. Returns the report and the verdict file
/// paths.
pub async fn cmd_run(
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(EvaluationReport, Vec<PathBuf>), RunError> {
    let mut files = Vec::new();
    for method in &config.methods {
        for track in config.configured_tracks() {
            files.push(cmd_score(config, &method.name, track, out_dir).await?);
        }
    }
    let report = cmd_evaluate(config, &files, out_dir)?;
    Ok((report, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::{BinaryLabel, HallucinationProb};
    use std::collections::BTreeMap as Map;

    #[test]
    fn verdict_file_names_round_trip() {
        for track in Track::ALL {
            let name = verdict_file_name("my-method_2", track);
            let (method, parsed) = parse_verdict_file_name(Path::new(&name)).unwrap();
            assert_eq!(method, "my-method_2");
            assert_eq!(parsed, track);
        }
        // method names may themselves contain dots in paths? they may not,
        // but a directory prefix must be ignored
        let (method, track) =
            parse_verdict_file_name(Path::new("/tmp/out/embed.aware.verdicts.jsonl")).unwrap();
        assert_eq!(method, "embed");
        assert_eq!(track, Track::ModelAware);
    }

    #[test]
    fn bad_verdict_file_names_are_rejected() {
        for name in [
            "embed.aware.jsonl",
            "embed.verdicts.jsonl",
            "embed.mixed.verdicts.jsonl",
            ".aware.verdicts.jsonl",
        ] {
            assert!(
                parse_verdict_file_name(Path::new(name)).is_err(),
                "{name} should not parse"
            );
        }
    }

    #[test]
    fn verdicts_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/m.aware.verdicts.jsonl");
        let mut diagnostics = Map::new();
        diagnostics.insert("raw_cosine".to_string(), "0.5".to_string());
        let verdicts = vec![
            DetectorVerdict::new("a", HallucinationProb::new(0.5).unwrap(), diagnostics),
            DetectorVerdict::new("b", HallucinationProb::new(0.1).unwrap(), Map::new()),
        ];
        write_verdicts(&path, &verdicts).unwrap();
        let read = read_verdicts(&path).unwrap();
        assert_eq!(read, verdicts);
    }

    #[test]
    fn tampered_verdict_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.aware.verdicts.jsonl");
        // label claims the opposite side of the probability
        let line = serde_json::json!({
            "point_id": "a",
            "p": 0.9,
            "label": "Not Hallucination",
            "diagnostics": {}
        });
        std::fs::write(&path, format!("{line}\n")).unwrap();
        let err = read_verdicts(&path).unwrap_err();
        assert!(matches!(err, RunError::VerdictFile { .. }), "{err}");
        assert!(err.to_string().contains("disagrees"));
    }

    #[test]
    fn exit_codes_split_backend_from_config_failures() {
        let config_err = RunError::Config(ConfigError::Invalid("x".into()));
        assert_eq!(config_err.exit_code(), 1);
        let backend_err = RunError::Detector {
            method: "m".into(),
            source: DetectorError::Backend {
                point_id: "p".into(),
                source: crate::backends::BackendError::Transport("boom".into()),
            },
        };
        assert_eq!(backend_err.exit_code(), 2);
        let missing_role = RunError::Detector {
            method: "m".into(),
            source: DetectorError::MissingRole {
                role: "zephyr".into(),
            },
        };
        assert_eq!(missing_role.exit_code(), 1);
    }

    #[test]
    fn label_field_must_match_probability_even_when_explicit() {
        // the serde path derives nothing: a consistent file round-trips
        let line = serde_json::json!({
            "point_id": "a",
            "p": 0.9,
            "label": "Hallucination",
            "diagnostics": {}
        });
        let verdict: DetectorVerdict = serde_json::from_value(line).unwrap();
        assert!(verdict.is_consistent());
        assert_eq!(verdict.label, BinaryLabel::Hallucination);
    }
}
