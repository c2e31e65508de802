//! NLI-based detection: a hypothesis that the reference fails to entail is
//! treated as hallucinated.
//!
//! The reference is always the premise and the hypothesis the NLI hypothesis —
//! entailment is directional, so swapping them changes the question being
//! asked.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::{NliBackend, NliTriple};
use crate::dataset::DataPoint;
use crate::scores::{similarity_to_prob, DetectorVerdict};

use super::DetectorError;

/// How the entail/neutral/contradict distribution folds into one probability.
///
/// The modes differ only in how much of the neutral mass counts as
/// hallucination: all of it, none of it, or half of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentMode {
    /// Support is the entailment probability: `p = 1 − entail`.
    #[default]
    Entail,
    /// Support is everything that doesn't contradict: `p = contradict`.
    Contradict,
    /// Neutral mass counts half: `p = contradict + neutral / 2`.
    EntailHalfNeutral,
}

impl EntailmentMode {
    /// The support score in `[0, 1]` that gets inverted into the probability.
    pub fn support(self, triple: &NliTriple) -> f64 {
        match self {
            Self::Entail => triple.entail(),
            Self::Contradict => 1.0 - triple.contradict(),
            Self::EntailHalfNeutral => triple.entail() + triple.neutral() / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NliOptions {
    /// Character budget applied independently to premise and hypothesis before
    /// the backend call; typical NLI models have tight input limits.
    pub truncate_chars: usize,
    pub mode: EntailmentMode,
}

impl Default for NliOptions {
    fn default() -> Self {
        Self {
            truncate_chars: 2000,
            mode: EntailmentMode::Entail,
        }
    }
}

fn clip(text: &str, budget: usize) -> (String, bool) {
    let mut chars = text.char_indices();
    match chars.nth(budget) {
        None => (text.to_string(), false),
        Some((byte_offset, _)) => (text[..byte_offset].to_string(), true),
    }
}

/// Scores one point with premise = reference, hypothesis = generated text.
/// Diagnostics carry the full distribution plus truncation/renormalization
/// flags.
pub async fn score_nli(
    backend: &dyn NliBackend,
    point: &DataPoint,
    options: &NliOptions,
) -> Result<DetectorVerdict, DetectorError> {
    let (premise, premise_truncated) = clip(point.reference(), options.truncate_chars);
    let (hypothesis, hypothesis_truncated) = clip(&point.hyp, options.truncate_chars);
    let triple = backend
        .infer(&premise, &hypothesis)
        .await
        .map_err(|source| DetectorError::Backend {
            point_id: point.id.clone(),
            source,
        })?;
    let support = options.mode.support(&triple).clamp(0.0, 1.0);
    let p = similarity_to_prob(support)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("p_entail".into(), triple.entail().to_string());
    diagnostics.insert("p_neutral".into(), triple.neutral().to_string());
    diagnostics.insert("p_contradict".into(), triple.contradict().to_string());
    if triple.renormalized() {
        diagnostics.insert("renormalized".into(), "true".into());
    }
    if premise_truncated {
        diagnostics.insert("premise_truncated".into(), "true".into());
    }
    if hypothesis_truncated {
        diagnostics.insert("hypothesis_truncated".into(), "true".into());
    }
    Ok(DetectorVerdict::new(point.id.clone(), p, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::mock::MockNli;
    use crate::dataset::TaskKind;
    use crate::scores::BinaryLabel;

    fn rt() -> tokio::runtime::Runtime {
        tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap()
    }

    fn point(task: TaskKind, src: &str, hyp: &str, tgt: &str) -> DataPoint {
        DataPoint {
            id: "n1".into(),
            task,
            src: src.into(),
            hyp: hyp.into(),
            tgt: tgt.into(),
            gold_label: None,
            gold_p: None,
            annotator_labels: None,
        }
    }

    #[test]
    fn default_mode_inverts_entailment() {
        let backend = MockNli::new([("ref", "hyp", 0.62, 0.30, 0.08)]);
        let p = point(TaskKind::Mt, "s", "hyp", "ref");
        let verdict = rt()
            .block_on(score_nli(&backend, &p, &NliOptions::default()))
            .unwrap();
        assert!((verdict.p.value() - 0.38).abs() < 1e-12);
        assert_eq!(verdict.label, BinaryLabel::NotHallucination);
        assert_eq!(verdict.diagnostics["p_entail"], "0.62");
        assert_eq!(verdict.diagnostics["p_neutral"], "0.3");
        assert_eq!(verdict.diagnostics["p_contradict"], "0.08");
        assert!(!verdict.diagnostics.contains_key("renormalized"));
        // p + p_entail reconstructs 1 up to float addition
        assert!((verdict.p.value() + 0.62 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn premise_is_reference_and_hypothesis_is_generated_text() {
        let backend = MockNli::new([("the reference", "the generation", 0.9, 0.05, 0.05)]);
        let p = point(TaskKind::Pg, "the reference", "the generation", "");
        rt().block_on(score_nli(&backend, &p, &NliOptions::default()))
            .unwrap();
        assert_eq!(
            backend.calls(),
            vec![("the reference".to_string(), "the generation".to_string())]
        );

        // Swapping the texts swaps the backend arguments (and misses the table).
        let swapped = point(TaskKind::Pg, "the generation", "the reference", "");
        assert!(rt()
            .block_on(score_nli(&backend, &swapped, &NliOptions::default()))
            .is_err());
        assert_eq!(
            backend.calls()[1],
            ("the generation".to_string(), "the reference".to_string())
        );
    }

    #[test]
    fn modes_weigh_neutral_mass_differently() {
        let backend = MockNli::new([("ref", "hyp", 0.5, 0.3, 0.2)]);
        let p = point(TaskKind::Dm, "", "hyp", "ref");
        let run = |mode| {
            let options = NliOptions {
                mode,
                ..NliOptions::default()
            };
            rt().block_on(score_nli(&backend, &p, &options))
                .unwrap()
                .p
                .value()
        };
        assert!((run(EntailmentMode::Entail) - 0.5).abs() < 1e-12);
        assert!((run(EntailmentMode::Contradict) - 0.2).abs() < 1e-12);
        assert!((run(EntailmentMode::EntailHalfNeutral) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn renormalized_distributions_are_flagged() {
        let backend = MockNli::new([("ref", "hyp", 0.60, 0.30, 0.1004)]);
        let p = point(TaskKind::Mt, "s", "hyp", "ref");
        let verdict = rt()
            .block_on(score_nli(&backend, &p, &NliOptions::default()))
            .unwrap();
        assert_eq!(verdict.diagnostics["renormalized"], "true");
        let expected = 1.0 - 0.60 / (0.60 + 0.30 + 0.1004);
        assert!((verdict.p.value() - expected).abs() < 1e-15);
    }

    #[test]
    fn oversized_inputs_are_clipped_and_flagged() {
        let long_ref = "r".repeat(30);
        let clipped_ref = "r".repeat(10);
        let backend = MockNli::new([(clipped_ref.as_str(), "hyp", 1.0, 0.0, 0.0)]);
        let p = point(TaskKind::Mt, "s", "hyp", &long_ref);
        let options = NliOptions {
            truncate_chars: 10,
            ..NliOptions::default()
        };
        let verdict = rt().block_on(score_nli(&backend, &p, &options)).unwrap();
        assert_eq!(verdict.diagnostics["premise_truncated"], "true");
        assert!(!verdict.diagnostics.contains_key("hypothesis_truncated"));
        assert_eq!(backend.calls()[0].0, clipped_ref);
    }

    #[test]
    fn clip_counts_characters_not_bytes() {
        let (clipped, truncated) = clip("ééééé", 3);
        assert!(truncated);
        assert_eq!(clipped, "ééé");
        let (whole, truncated) = clip("ab", 2);
        assert!(!truncated);
        assert_eq!(whole, "ab");
    }

    #[test]
    fn invalid_distribution_is_hard_error_with_point_id() {
        let backend = MockNli::new([("ref", "hyp", 0.9, 0.4, 0.2)]);
        let p = point(TaskKind::Mt, "s", "hyp", "ref");
        let err = rt()
            .block_on(score_nli(&backend, &p, &NliOptions::default()))
            .unwrap_err();
        assert!(err.is_backend());
        assert!(err.to_string().contains("n1"), "{err}");
    }
}
