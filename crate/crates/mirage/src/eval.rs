//! Scoring detector verdicts against gold annotations, and rendering the
//! results as a method-by-track report.
//!
//! Two measures per (method, track):
//!
//! * accuracy of the binary label against the gold label;
//! * Spearman correlation between predicted and gold probabilities, computed
//!   as the Pearson correlation of average ranks (ties get the mean of the
//!   rank positions they occupy). It is `None` when fewer than two points
//!   carry gold values or when either side is constant.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{Dataset, Track};
use crate::scores::DetectorVerdict;

/// Identifier for the rank-based correlation variant, recorded in manifests.
pub const SPEARMAN_VARIANT: &str = "pearson-on-midranks";

/// Em dash shown in reports where a correlation is undefined.
pub const UNDEFINED: &str = "\u{2014}";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    Empty,
    #[error("paired lists have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value at index {0}")]
    NotFinite(usize),
    #[error("verdict for unknown point id {0:?}")]
    UnknownPointId(String),
    #[error("more than one verdict for point id {0:?}")]
    DuplicateVerdict(String),
    #[error("duplicate result for method {method:?} on the {track} track")]
    DuplicateResult { method: String, track: Track },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
}

/// Average ranks, 1-based. Equal values share the mean of the positions they
/// would occupy, so `[10, 20, 20, 30]` ranks as `[1, 2.5, 2.5, 4]`.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, EvalError> {
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(EvalError::NotFinite(bad));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1 averaged
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &index in &order[start..=end] {
            ranks[index] = rank;
        }
        start = end + 1;
    }
    Ok(ranks)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation on average ranks. `Ok(None)` when undefined (fewer
/// than two pairs, or a constant list); non-finite inputs are an error.
pub fn spearman(predicted: &[f64], gold: &[f64]) -> Result<Option<f64>, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            left: predicted.len(),
            right: gold.len(),
        });
    }
    let rank_x = average_ranks(predicted)?;
    let rank_y = average_ranks(gold)?;
    if predicted.len() < 2 {
        return Ok(None);
    }
    Ok(pearson(&rank_x, &rank_y))
}

/// Fraction of matching labels.
pub fn accuracy(matches: usize, total: usize) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(matches as f64 / total as f64)
}

/// One method's measures on one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub track: Track,
    pub accuracy: f64,
    pub rho: Option<f64>,
    /// Points that carried gold annotations and were scored.
    pub n: usize,
}

/// A [`MethodResult`] plus bookkeeping about what was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEvaluation {
    pub result: MethodResult,
    /// Points skipped because they had no gold label or probability.
    pub excluded_missing_gold: usize,
}

/// Scores one method's verdicts against one track's gold annotations.
///
/// Every verdict must name a point in the dataset; points without gold
/// annotations are excluded (and counted), not errors.
pub fn evaluate(
    verdicts: &[DetectorVerdict],
    dataset: &Dataset,
    method: &str,
) -> Result<MethodEvaluation, EvalError> {
    let points: HashMap<&str, &crate::dataset::DataPoint> =
        dataset.points.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut matches = 0;
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    let mut excluded_missing_gold = 0;
    for verdict in verdicts {
        let point = points
            .get(verdict.point_id.as_str())
            .ok_or_else(|| EvalError::UnknownPointId(verdict.point_id.clone()))?;
        if seen.insert(verdict.point_id.as_str(), ()).is_some() {
            return Err(EvalError::DuplicateVerdict(verdict.point_id.clone()));
        }
        let (Some(gold_label), Some(gold_p)) = (point.gold_label, point.gold_p) else {
            excluded_missing_gold += 1;
            continue;
        };
        if verdict.label == gold_label {
            matches += 1;
        }
        predicted.push(verdict.p.value());
        gold.push(gold_p);
    }
    let accuracy = accuracy(matches, predicted.len())?;
    let rho = spearman(&predicted, &gold)?;
    Ok(MethodEvaluation {
        result: MethodResult {
            method: method.to_string(),
            track: dataset.track,
            accuracy,
            rho,
            n: predicted.len(),
        },
        excluded_missing_gold,
    })
}

/// Checksummed identity of an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDigest {
    pub path: String,
    pub sha256: String,
    pub points: usize,
}

impl DatasetDigest {
    pub fn for_file(path: &Path, points: usize) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            write!(sha256, "{b:02x}").expect("write to string");
        }
        Ok(Self {
            path: path.display().to_string(),
            sha256,
            points,
        })
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// RFC 3339, second precision — the only timestamp in a report.
    pub created_at: String,
    /// Correlation variant, see [`SPEARMAN_VARIANT`].
    pub spearman: String,
    /// Snapshot of the run configuration.
    pub config: serde_json::Value,
    /// Input datasets by track id.
    pub datasets: BTreeMap<String, DatasetDigest>,
    /// Points excluded for missing gold, keyed `method.track-id`.
    pub excluded_missing_gold: BTreeMap<String, usize>,
}

/// All method results for a run plus the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub manifest: RunManifest,
    pub results: Vec<MethodResult>,
}

impl EvaluationReport {
    /// Rejects duplicate (method, track) pairs.
    pub fn new(manifest: RunManifest, results: Vec<MethodResult>) -> Result<Self, EvalError> {
        let mut seen: HashMap<(&str, Track), ()> = HashMap::new();
        for result in &results {
            if seen
                .insert((result.method.as_str(), result.track), ())
                .is_some()
            {
                return Err(EvalError::DuplicateResult {
                    method: result.method.clone(),
                    track: result.track,
                });
            }
        }
        Ok(Self { manifest, results })
    }

    /// Method names in first-appearance order.
    fn methods(&self) -> Vec<&str> {
        let mut methods = Vec::new();
        for result in &self.results {
            if !methods.contains(&result.method.as_str()) {
                methods.push(result.method.as_str());
            }
        }
        methods
    }

    fn cell(&self, method: &str, track: Track) -> Option<&MethodResult> {
        self.results
            .iter()
            .find(|r| r.method == method && r.track == track)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

fn fmt_number(value: f64) -> String {
    format!("{value:.4}")
}

fn fmt_rho(rho: Option<f64>) -> String {
    rho.map(fmt_number).unwrap_or_else(|| UNDEFINED.to_string())
}

fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(
        "| Method | Model Aware Accuracy | Model Aware Correlation(\u{03c1}) | Model Agnostic Accuracy | Model Agnostic Correlation(\u{03c1}) |\n",
    );
    out.push_str("| --- | --- | --- | --- | --- |\n");
    for method in report.methods() {
        let mut cells = vec![method.to_string()];
        for track in Track::ALL {
            match report.cell(method, track) {
                Some(result) => {
                    cells.push(fmt_number(result.accuracy));
                    cells.push(fmt_rho(result.rho));
                }
                None => {
                    cells.push(UNDEFINED.to_string());
                    cells.push(UNDEFINED.to_string());
                }
            }
        }
        out.push_str("| ");
        out.push_str(&cells.join(" | "));
        out.push_str(" |\n");
    }
    out
}

fn render_csv(report: &EvaluationReport) -> Result<String, EvalError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["method", "track", "accuracy", "rho", "n"])
        .map_err(|e| EvalError::Csv(e.to_string()))?;
    for result in &report.results {
        writer
            .write_record([
                result.method.as_str(),
                result.track.id(),
                &result.accuracy.to_string(),
                &result.rho.map(|r| r.to_string()).unwrap_or_default(),
                &result.n.to_string(),
            ])
            .map_err(|e| EvalError::Csv(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| EvalError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Csv(e.to_string()))
}

/// Renders a report. Markdown is the side-by-side track grid; CSV is a
/// lossless row-per-result table (empty cell for an undefined correlation);
/// JSON carries the full report including the manifest.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String, EvalError> {
    match format {
        ReportFormat::Markdown => Ok(render_markdown(report)),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).map_err(|e| EvalError::Json(e.to_string()))
        }
    }
}
