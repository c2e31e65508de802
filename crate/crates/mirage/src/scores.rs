//! Core score types shared by every detector: calibrated hallucination
//! probabilities, binary labels, and per-point verdicts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("similarity {0} is outside [0, 1]")]
    SimilarityOutOfRange(f64),
    #[error("scale score {0} is outside 1..=5")]
    ScaleScoreOutOfRange(u8),
}

/// A probability that a hypothesis is hallucinated, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct HallucinationProb(f64);

impl HallucinationProb {
    pub fn new(value: f64) -> Result<Self, ScoreError> {
        // NaN fails the range check as well.
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(ScoreError::ProbabilityOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for HallucinationProb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        Self::new(raw).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for HallucinationProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The binary gold/predicted annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Hallucination,
    #[serde(rename = "Not Hallucination")]
    NotHallucination,
}

impl BinaryLabel {
    /// Parses a gold label, ignoring ASCII case. Anything but the two known
    /// spellings is `None`.
    pub fn parse(text: &str) -> Option<Self> {
        if text.eq_ignore_ascii_case("hallucination") {
            Some(Self::Hallucination)
        } else if text.eq_ignore_ascii_case("not hallucination") {
            Some(Self::NotHallucination)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hallucination => "Hallucination",
            Self::NotHallucination => "Not Hallucination",
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds a probability at 0.5; the boundary itself counts as `Hallucination`.
pub fn classify(p: HallucinationProb) -> BinaryLabel {
    if p.value() < 0.5 {
        BinaryLabel::NotHallucination
    } else {
        BinaryLabel::Hallucination
    }
}

/// Converts a similarity in `[0, 1]` into a hallucination probability `1 − sim`.
pub fn similarity_to_prob(sim: f64) -> Result<HallucinationProb, ScoreError> {
    if !(0.0..=1.0).contains(&sim) {
        return Err(ScoreError::SimilarityOutOfRange(sim));
    }
    HallucinationProb::new(1.0 - sim)
}

/// Maps a 1-to-5 support score onto `[0, 1]` via `(score − 1) / 4`.
pub fn normalize_1to5(score: u8) -> Result<f64, ScoreError> {
    if !(1..=5).contains(&score) {
        return Err(ScoreError::ScaleScoreOutOfRange(score));
    }
    Ok(f64::from(score - 1) / 4.0)
}

/// One detector's judgement of one data point.
///
/// `label` is always derived from `p` at construction; files read back from
/// disk are re-checked with [`DetectorVerdict::is_consistent`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub point_id: String,
    pub p: HallucinationProb,
    pub label: BinaryLabel,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, String>,
}

impl DetectorVerdict {
    pub fn new(
        point_id: impl Into<String>,
        p: HallucinationProb,
        diagnostics: BTreeMap<String, String>,
    ) -> Self {
        Self {
            point_id: point_id.into(),
            p,
            label: classify(p),
            diagnostics,
        }
    }

    /// Whether `label` matches `classify(p)`.
    pub fn is_consistent(&self) -> bool {
        self.label == classify(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(HallucinationProb::new(0.0).is_ok());
        assert!(HallucinationProb::new(1.0).is_ok());
        assert_eq!(
            HallucinationProb::new(-0.1),
            Err(ScoreError::ProbabilityOutOfRange(-0.1))
        );
        assert!(HallucinationProb::new(1.1).is_err());
        assert!(HallucinationProb::new(f64::NAN).is_err());
    }

    #[test]
    fn similarity_endpoints() {
        assert_eq!(similarity_to_prob(1.0).unwrap().value(), 0.0);
        assert_eq!(similarity_to_prob(0.0).unwrap().value(), 1.0);
        assert_eq!(similarity_to_prob(0.25).unwrap().value(), 0.75);
        assert!(similarity_to_prob(1.5).is_err());
        assert!(similarity_to_prob(-0.01).is_err());
        assert!(similarity_to_prob(f64::NAN).is_err());
    }

    #[test]
    fn normalize_scale_endpoints_and_monotonicity() {
        assert_eq!(normalize_1to5(1).unwrap(), 0.0);
        assert_eq!(normalize_1to5(3).unwrap(), 0.5);
        assert_eq!(normalize_1to5(5).unwrap(), 1.0);
        assert_eq!(normalize_1to5(0), Err(ScoreError::ScaleScoreOutOfRange(0)));
        assert_eq!(normalize_1to5(6), Err(ScoreError::ScaleScoreOutOfRange(6)));
        let values: Vec<f64> = (1..=5).map(|s| normalize_1to5(s).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn classify_boundary_is_hallucination() {
        assert_eq!(
            classify(HallucinationProb::new(0.5).unwrap()),
            BinaryLabel::Hallucination
        );
        assert_eq!(
            classify(HallucinationProb::new(0.49999999).unwrap()),
            BinaryLabel::NotHallucination
        );
        assert_eq!(
            classify(HallucinationProb::new(1.0).unwrap()),
            BinaryLabel::Hallucination
        );
        assert_eq!(
            classify(HallucinationProb::new(0.0).unwrap()),
            BinaryLabel::NotHallucination
        );
    }

    #[test]
    fn label_parsing_is_case_insensitive_and_strict() {
        assert_eq!(
            BinaryLabel::parse("HALLUCINATION"),
            Some(BinaryLabel::Hallucination)
        );
        assert_eq!(
            BinaryLabel::parse("not hallucination"),
            Some(BinaryLabel::NotHallucination)
        );
        assert_eq!(BinaryLabel::parse("Not  Hallucination"), None);
        assert_eq!(BinaryLabel::parse("yes"), None);
    }

    #[test]
    fn label_serde_spellings() {
        assert_eq!(
            serde_json::to_string(&BinaryLabel::NotHallucination).unwrap(),
            "\"Not Hallucination\""
        );
        let parsed: BinaryLabel = serde_json::from_str("\"Hallucination\"").unwrap();
        assert_eq!(parsed, BinaryLabel::Hallucination);
    }

    #[test]
    fn verdict_label_follows_probability() {
        let verdict =
            DetectorVerdict::new("x1", HallucinationProb::new(0.75).unwrap(), BTreeMap::new());
        assert_eq!(verdict.label, BinaryLabel::Hallucination);
        assert!(verdict.is_consistent());

        let json = serde_json::to_string(&verdict).unwrap();
        let back: DetectorVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, verdict);

        let tampered: DetectorVerdict = serde_json::from_str(
            r#"{"point_id":"x1","p":0.1,"label":"Hallucination","diagnostics":{}}"#,
        )
        .unwrap();
        assert!(!tampered.is_consistent());
    }

    #[test]
    fn verdict_deserialization_rejects_bad_probability() {
        let err = serde_json::from_str::<DetectorVerdict>(
            r#"{"point_id":"x1","p":1.25,"label":"Hallucination","diagnostics":{}}"#,
        );
        assert!(err.is_err());
    }

    proptest::proptest! {
        #[test]
        fn inversion_round_trips(sim in 0.0f64..=1.0) {
            let p = similarity_to_prob(sim).unwrap();
            let back = 1.0 - p.value();
            proptest::prop_assert!((back - sim).abs() <= 1e-15);
            proptest::prop_assert!((0.0..=1.0).contains(&p.value()));
        }

        #[test]
        fn classification_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lo_label = classify(HallucinationProb::new(lo).unwrap());
            let hi_label = classify(HallucinationProb::new(hi).unwrap());
            // Once over the threshold, staying higher can never flip back.
            proptest::prop_assert!(
                !(lo_label == BinaryLabel::Hallucination && hi_label == BinaryLabel::NotHallucination)
            );
        }
    }
}
