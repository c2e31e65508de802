//! Score points by cosine similarity between reference and hypothesis
//! embeddings: `p(hallucination) = 1 − cosine`, negative cosines clamped
//! to zero similarity first.
//!
//! Runs entirely offline against a scripted embedding table.
//!
//! ```text
//! cargo run --example embedding_similarity
//! ```

use mirage::backends::mock::MockEmbedding;
use mirage::dataset::{DataPoint, TaskKind};
use mirage::detectors::similarity::score_embedding;

fn point(id: &str, hyp: &str, tgt: &str) -> DataPoint {
    DataPoint {
        id: id.into(),
        task: TaskKind::Mt,
        src: "source text".into(),
        hyp: hyp.into(),
        tgt: tgt.into(),
        gold_label: None,
        gold_p: None,
        annotator_labels: None,
    }
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Each text the detector will embed needs a vector in the table.
    let backend = MockEmbedding::new([
        ("The cat sleeps.", vec![1.0, 0.0, 0.0]),
        ("The cat is sleeping.", vec![1.0, 0.1, 0.0]),
        ("A spaceship landed.", vec![0.0, 1.0, 0.0]),
        ("Opposite in every way.", vec![-1.0, 0.0, 0.0]),
    ])?;

    let cases = [
        point("close", "The cat is sleeping.", "The cat sleeps."),
        point("unrelated", "A spaceship landed.", "The cat sleeps."),
        point("anti", "Opposite in every way.", "The cat sleeps."),
    ];

    for case in &cases {
        let verdict = score_embedding(&backend, case).await?;
        println!(
            "{:>9}: p = {:.4}  label = {}  (raw cosine {})",
            verdict.point_id,
            verdict.p.value(),
            verdict.label,
            verdict.diagnostics["raw_cosine"],
        );
    }
    println!("\nnegative cosines clamp to zero similarity, so `anti` gets p = 1 exactly;");
    println!("the unclamped value stays visible in the diagnostics.");
    Ok(())
}
