//! Compare detector verdicts against gold annotations and render the
//! results as a report.
//!
//! Accuracy counts label agreement; the correlation is Spearman's ρ
//! (Pearson on midranks) between predicted probabilities and the fraction
//! of annotators who saw a hallucination. Points without gold annotations
//! are excluded and counted, not failed.
//!
//! ```text
//! cargo run --example evaluate_report
//! ```

use std::collections::BTreeMap;

use mirage::dataset::{DataPoint, Dataset, TaskKind, Track};
use mirage::eval::{
    evaluate, render_report, spearman, EvaluationReport, ReportFormat, RunManifest,
    SPEARMAN_VARIANT,
};
use mirage::scores::{BinaryLabel, DetectorVerdict, HallucinationProb};

fn point(id: &str, gold: Option<(BinaryLabel, f64)>) -> DataPoint {
    DataPoint {
        id: id.into(),
        task: TaskKind::Mt,
        src: format!("src for {id}"),
        hyp: format!("hyp for {id}"),
        tgt: format!("tgt for {id}"),
        gold_label: gold.map(|(label, _)| label),
        gold_p: gold.map(|(_, p)| p),
        annotator_labels: None,
    }
}

fn verdict(id: &str, p: f64) -> DetectorVerdict {
    DetectorVerdict::new(id, HallucinationProb::new(p).unwrap(), BTreeMap::new())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    use BinaryLabel::{Hallucination as H, NotHallucination as N};

    // Ties in either ranking get the average of the ranks they straddle.
    let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[0.1, 0.4, 0.2, 0.9])?;
    println!("spearman with a tie: {:.6}\n", rho.expect("defined"));

    let dataset = Dataset {
        track: Track::ModelAware,
        points: vec![
            point("a", Some((N, 0.0))),
            point("b", Some((H, 0.9))),
            point("c", Some((H, 0.6))),
            point("d", Some((N, 0.2))),
            point("e", None), // unannotated — excluded, not an error
        ],
    };

    let sharp = vec![
        verdict("a", 0.05),
        verdict("b", 0.95),
        verdict("c", 0.70),
        verdict("d", 0.10),
        verdict("e", 0.50),
    ];
    // This detector misses point c and inverts the ranking of a and d.
    let blunt = vec![
        verdict("a", 0.30),
        verdict("b", 0.80),
        verdict("c", 0.40),
        verdict("d", 0.20),
        verdict("e", 0.50),
    ];

    let mut results = Vec::new();
    let mut excluded = BTreeMap::new();
    for (name, verdicts) in [("sharp", &sharp), ("blunt", &blunt)] {
        let evaluation = evaluate(verdicts, &dataset, name)?;
        println!(
            "{name}: accuracy {:.4}, rho {:?}, scored {} (excluded {})",
            evaluation.result.accuracy,
            evaluation.result.rho,
            evaluation.result.n,
            evaluation.excluded_missing_gold,
        );
        excluded.insert(
            format!("{name}.{}", dataset.track.id()),
            evaluation.excluded_missing_gold,
        );
        results.push(evaluation.result);
    }

    let manifest = RunManifest {
        created_at: "2026-01-01T00:00:00Z".into(),
        spearman: SPEARMAN_VARIANT.into(),
        config: serde_json::json!({"note": "hand-built demo, no config file"}),
        datasets: BTreeMap::new(),
        excluded_missing_gold: excluded,
    };
    let report = EvaluationReport::new(manifest, results)?;

    println!("\n--- markdown ---");
    print!("{}", render_report(&report, ReportFormat::Markdown)?);
    println!("\n--- csv ---");
    print!("{}", render_report(&report, ReportFormat::Csv)?);
    println!("\nonly one track was scored, so the agnostic columns show \u{2014};");
    println!("the JSON format additionally carries the manifest shown above.");
    Ok(())
}
