//! Similarity-based detectors: embedding cosine and LLM-prompted 1-to-5 scoring.

use std::collections::BTreeMap;

use crate::backends::extract::{complete_structured, CommentatorReply};
use crate::backends::{BackendError, ChatBackend, EmbeddingBackend};
use crate::dataset::DataPoint;
use crate::prompts::PromptTemplate;
use crate::scores::{normalize_1to5, similarity_to_prob, DetectorVerdict};

use super::DetectorError;

/// Cosine similarity between two vectors of equal, nonzero dimension. Zero
/// vectors have no direction and are rejected. The result is clamped into
/// `[-1, 1]` to absorb floating-point drift.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, DetectorError> {
    if u.len() != v.len() {
        return Err(DetectorError::Geometry(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(DetectorError::Geometry("vectors are empty".into()));
    }
    let mut dot = 0.0;
    let mut norm_u = 0.0;
    let mut norm_v = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(DetectorError::Geometry(
            "zero vector has no direction".into(),
        ));
    }
    Ok((dot / (norm_u.sqrt() * norm_v.sqrt())).clamp(-1.0, 1.0))
}

/// Scores one point by cosine between reference and hypothesis embeddings.
///
/// Negative cosines count as total dissimilarity (the similarity is clamped
/// into `[0, 1]` before inversion); diagnostics keep the unclamped value.
pub async fn score_embedding(
    backend: &dyn EmbeddingBackend,
    point: &DataPoint,
) -> Result<DetectorVerdict, DetectorError> {
    let hard = |source: BackendError| DetectorError::Backend {
        point_id: point.id.clone(),
        source,
    };
    let reference = backend.embed(point.reference()).await.map_err(hard)?;
    let hypothesis = backend.embed(&point.hyp).await.map_err(hard)?;
    let raw = cosine(&reference, &hypothesis)?;
    let p = similarity_to_prob(raw.clamp(0.0, 1.0))?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("raw_cosine".to_string(), raw.to_string());
    Ok(DetectorVerdict::new(point.id.clone(), p, diagnostics))
}

/// Scores one point by asking a chat model for a 1-to-5 support score
/// (single sample). The score maps onto `[0, 1]` and inverts into the
/// hallucination probability; the yes/no/maybe answer is diagnostic only.
pub async fn score_llm(
    backend: &dyn ChatBackend,
    template: &PromptTemplate,
    point: &DataPoint,
    max_retries: u32,
) -> Result<DetectorVerdict, DetectorError> {
    let prompt = template.render_commentator(point.reference(), &point.hyp);
    let reply: CommentatorReply = complete_structured(backend, &prompt, 0, max_retries)
        .await
        .map_err(|source| DetectorError::Backend {
            point_id: point.id.clone(),
            source,
        })?;
    let p = similarity_to_prob(normalize_1to5(reply.score)?)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("answer".into(), reply.answer.to_string());
    diagnostics.insert("score".into(), reply.score.to_string());
    diagnostics.insert("description".into(), reply.description.clone());
    if reply.from_fallback {
        diagnostics.insert("parse_fallback".into(), "true".into());
    }
    Ok(DetectorVerdict::new(point.id.clone(), p, diagnostics))
}
