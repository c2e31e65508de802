//! Detect fluent-but-unsupported output from text generators, and measure how
//! well each detection method agrees with human annotations.
//!
//! A *data point* pairs a generated sentence (`hyp`) with the text that is
//! supposed to license it — the target for translation and definition
//! modeling, the source for paraphrase. A *detector* turns that pair into a
//! probability that the sentence is a hallucination, plus a binary label at
//! the 0.5 boundary. Four detector families are built in:
//!
//! * embedding cosine ([`detectors::similarity::score_embedding`]),
//! * a chat model prompted for a 1-to-5 support score
//!   ([`detectors::similarity::score_llm`]),
//! * entailment probability from an NLI model, inverted
//!   ([`detectors::nli::score_nli`]),
//! * commentator/judge ensembles over several chat models
//!   ([`detectors::judge::run_composition`]).
//!
//! [`eval`] compares verdicts to gold annotations (accuracy and a rank
//! correlation) and renders method-by-track reports. Backends are trait
//! objects: HTTP implementations live in [`backends::http`], scripted
//! in-memory ones for tests and offline runs in [`backends::mock`].
//!
//! The fastest way in is the examples, each runnable offline:
//!
//! ```text
//! cargo run --example load_dataset
//! cargo run --example embedding_similarity
//! cargo run --example llm_similarity
//! cargo run --example nli_detector
//! cargo run --example judge_ensembles
//! cargo run --example evaluate_report
//! cargo run --example full_run
//! cargo run --example http_backends   # needs a live endpoint, see its header
//! ```
//!
//! The same capabilities ship as a thin binary (`mirage score`, `evaluate`,
//! `run`, `validate-config`) driven by a JSON config; see [`config`] and
//! [`cli`].

pub mod backends;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod detectors;
pub mod eval;
pub mod prompts;
pub mod runner;
pub mod scores;

pub use dataset::{load_jsonl, load_jsonl_with, DataPoint, Dataset, TaskKind, Track};
pub use scores::{
    classify, normalize_1to5, similarity_to_prob, BinaryLabel, DetectorVerdict, HallucinationProb,
};
