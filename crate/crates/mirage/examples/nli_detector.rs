//! Score points with a natural-language-inference model: the reference is
//! the premise, the generated sentence the hypothesis, and low entailment
//! means hallucination.
//!
//! Shows the three support modes, the renormalization of slightly drifted
//! probability triples, and the per-side character truncation.
//!
//! ```text
//! cargo run --example nli_detector
//! ```

use mirage::backends::mock::MockNli;
use mirage::dataset::{DataPoint, TaskKind};
use mirage::detectors::nli::{score_nli, EntailmentMode, NliOptions};

fn point(id: &str, hyp: &str, tgt: &str) -> DataPoint {
    DataPoint {
        id: id.into(),
        task: TaskKind::Mt,
        src: "source".into(),
        hyp: hyp.into(),
        tgt: tgt.into(),
        gold_label: None,
        gold_p: None,
        annotator_labels: None,
    }
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let long_reference = "The committee approved the budget. ".repeat(40);
    let clipped_reference: String = long_reference.chars().take(120).collect();
    let backend = MockNli::new([
        // (premise, hypothesis, entailment, neutral, contradiction)
        (
            "It rained all night.",
            "The streets were wet.",
            0.70,
            0.25,
            0.05,
        ),
        // Scores from a real service rarely sum to exactly one.
        (
            "It rained all night.",
            "The game was cancelled.",
            0.20,
            0.50,
            0.3004,
        ),
        (
            clipped_reference.as_str(),
            "The budget passed.",
            0.90,
            0.08,
            0.02,
        ),
    ]);

    let wet = point("wet", "The streets were wet.", "It rained all night.");
    let cancelled = point(
        "cancelled",
        "The game was cancelled.",
        "It rained all night.",
    );

    // The same triple under each support mode: Entail uses only the
    // entailment mass, Contradict only the contradiction mass, and
    // EntailHalfNeutral splits the neutral mass down the middle.
    for mode in [
        EntailmentMode::Entail,
        EntailmentMode::Contradict,
        EntailmentMode::EntailHalfNeutral,
    ] {
        let options = NliOptions {
            mode,
            ..NliOptions::default()
        };
        let verdict = score_nli(&backend, &cancelled, &options).await?;
        println!(
            "{mode:?}: p = {:.4}  label = {}",
            verdict.p.value(),
            verdict.label
        );
    }

    let verdict = score_nli(&backend, &cancelled, &NliOptions::default()).await?;
    println!(
        "\ndrifted triple (sums to 1.0004) was renormalized: {} — entail carried as {}",
        verdict
            .diagnostics
            .get("renormalized")
            .map(String::as_str)
            .unwrap_or("false"),
        verdict.diagnostics["p_entail"],
    );

    let verdict = score_nli(&backend, &wet, &NliOptions::default()).await?;
    println!(
        "clean triple keeps its values untouched: renormalized = {}",
        verdict
            .diagnostics
            .get("renormalized")
            .map(String::as_str)
            .unwrap_or("false"),
    );

    // NLI encoders have tight input limits, so each side is clipped to a
    // character budget before the call and flagged when that happened.
    let long = point("long", "The budget passed.", &long_reference);
    let options = NliOptions {
        truncate_chars: 120,
        ..NliOptions::default()
    };
    let verdict = score_nli(&backend, &long, &options).await?;
    println!(
        "premise of {} chars clipped to 120: premise_truncated = {}, p = {:.4}",
        long_reference.chars().count(),
        verdict
            .diagnostics
            .get("premise_truncated")
            .map(String::as_str)
            .unwrap_or("false"),
        verdict.p.value(),
    );
    Ok(())
}
