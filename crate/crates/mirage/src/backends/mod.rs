//! Backend abstractions plus the scripted and HTTP implementations.
//!
//! Detectors only ever see the three traits here, so any embedding store, chat
//! server, or NLI scorer can be swapped in without touching pipeline code.

pub mod extract;
pub mod http;
pub mod mock;

use async_trait::async_trait;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    /// Network-level failure (connect, timeout, protocol).
    #[error("transport: {0}")]
    Transport(String),
    /// Non-2xx HTTP response.
    #[error("http status {status}: {body_snippet}")]
    HttpStatus { status: u16, body_snippet: String },
    /// 2xx response whose body does not have the expected shape.
    #[error("unexpected response shape: {0}")]
    ResponseShape(String),
    /// A scripted backend has no entry for the request; mocks are exhaustive
    /// by design, so this is a hard error rather than a silent default.
    #[error("no scripted reply for request: {0}")]
    UnscriptedRequest(String),
    /// An entail/neutral/contradict distribution outside tolerance.
    #[error("invalid NLI distribution: {0}")]
    InvalidNliDistribution(String),
    /// Bad backend construction (endpoint, tables, knobs).
    #[error("backend configuration: {0}")]
    Configuration(String),
}

impl BackendError {
    /// Whether the HTTP layer should retry the request: transport failures,
    /// 429, and 5xx qualify; other statuses and shape errors do not.
    pub fn retryable(&self) -> bool {
        match self {
            Self::Transport(_) => true,
            Self::HttpStatus { status, .. } => *status == 429 || (500..=599).contains(status),
            _ => false,
        }
    }
}

/// An entail/neutral/contradict probability distribution.
///
/// Raw wire values may drift off the simplex; construction renormalizes
/// anything within `1e-3` of summing to 1 (and records that it did), and
/// rejects worse. Accessors therefore always expose a sum-1 distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliTriple {
    entail: f64,
    neutral: f64,
    contradict: f64,
    renormalized: bool,
}

impl NliTriple {
    pub fn new(entail: f64, neutral: f64, contradict: f64) -> Result<Self, BackendError> {
        for (name, value) in [
            ("entailment", entail),
            ("neutral", neutral),
            ("contradiction", contradict),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(BackendError::InvalidNliDistribution(format!(
                    "{name} probability {value} is outside [0, 1]"
                )));
            }
        }
        let sum = entail + neutral + contradict;
        if (sum - 1.0).abs() > 1e-3 {
            return Err(BackendError::InvalidNliDistribution(format!(
                "probabilities sum to {sum}, more than 1e-3 away from 1"
            )));
        }
        if (sum - 1.0).abs() > 1e-9 {
            log::warn!("renormalizing NLI distribution with sum {sum}");
            Ok(Self {
                entail: entail / sum,
                neutral: neutral / sum,
                contradict: contradict / sum,
                renormalized: true,
            })
        } else {
            Ok(Self {
                entail,
                neutral,
                contradict,
                renormalized: false,
            })
        }
    }

    pub fn entail(&self) -> f64 {
        self.entail
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    pub fn contradict(&self) -> f64 {
        self.contradict
    }

    /// True when construction had to scale the distribution back onto the simplex.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }
}

/// Maps text to a dense vector. Implementations must be deterministic per text
/// within one run.
#[async_trait]
pub trait EmbeddingBackend: Send + Sync {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError>;
}

/// Chat-style text completion.
///
/// `sample_index` numbers repeated samples of the same prompt (0, 1, …) so
/// scripted backends can vary replies per sample; HTTP backends ignore it.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    /// Stable identifier baked into diagnostics and judge prompts.
    fn model_name(&self) -> &str;

    async fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, BackendError>;
}

/// Natural-language-inference scorer.
#[async_trait]
pub trait NliBackend: Send + Sync {
    async fn infer(&self, premise: &str, hypothesis: &str) -> Result<NliTriple, BackendError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_accepts_exact_distributions_untouched() {
        let triple = NliTriple::new(0.62, 0.30, 0.08).unwrap();
        assert_eq!(triple.entail(), 0.62);
        assert_eq!(triple.neutral(), 0.30);
        assert_eq!(triple.contradict(), 0.08);
        assert!(!triple.renormalized());
    }

    #[test]
    fn triple_renormalizes_small_drift() {
        let triple = NliTriple::new(0.60, 0.30, 0.1004).unwrap();
        assert!(triple.renormalized());
        let sum = triple.entail() + triple.neutral() + triple.contradict();
        assert!((sum - 1.0).abs() <= 1e-6, "sum {sum}");
        assert!((triple.entail() - 0.60 / 1.0004).abs() < 1e-12);
    }

    #[test]
    fn triple_rejects_large_drift_and_bad_components() {
        assert!(NliTriple::new(0.5, 0.5, 0.5).is_err());
        assert!(NliTriple::new(-0.1, 0.6, 0.5).is_err());
        assert!(NliTriple::new(1.2, 0.0, 0.0).is_err());
        assert!(NliTriple::new(f64::NAN, 0.5, 0.5).is_err());
    }

    #[test]
    fn retryability_matrix() {
        assert!(BackendError::Transport("timeout".into()).retryable());
        assert!(BackendError::HttpStatus {
            status: 429,
            body_snippet: String::new()
        }
        .retryable());
        assert!(BackendError::HttpStatus {
            status: 503,
            body_snippet: String::new()
        }
        .retryable());
        assert!(!BackendError::HttpStatus {
            status: 404,
            body_snippet: String::new()
        }
        .retryable());
        assert!(!BackendError::HttpStatus {
            status: 401,
            body_snippet: String::new()
        }
        .retryable());
        assert!(!BackendError::ResponseShape("nope".into()).retryable());
    }

    proptest::proptest! {
        #[test]
        fn accepted_triples_always_sum_to_one(
            e in 0.0f64..=1.0,
            n in 0.0f64..=1.0,
            c in 0.0f64..=1.0,
        ) {
            if let Ok(triple) = NliTriple::new(e, n, c) {
                let sum = triple.entail() + triple.neutral() + triple.contradict();
                proptest::prop_assert!((sum - 1.0).abs() <= 1e-6);
            }
        }
    }
}
