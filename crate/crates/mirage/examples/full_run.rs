//! The whole pipeline driven by a config file: load datasets, score every
//! configured method on every configured track, write verdict files, and
//! render the report — the same path the `mirage run` subcommand takes.
//!
//! Everything happens inside a temporary directory with scripted backends,
//! so the example runs offline and leaves nothing behind.
//!
//! ```text
//! cargo run --example full_run
//! ```

use std::fs;

use mirage::config::RunConfig;
use mirage::eval::{render_report, ReportFormat};
use mirage::runner::cmd_run;

const DATASET: &str = r#"{"id": "p1", "task": "MT", "src": "Der Hund bellt.", "hyp": "The dog barks.", "tgt": "The dog is barking.", "label": "Not Hallucination", "p(Hallucination)": 0.0}
{"id": "p2", "task": "MT", "src": "Es schneit.", "hyp": "The sun is shining.", "tgt": "It is snowing.", "label": "Hallucination", "p(Hallucination)": 1.0}
{"id": "p3", "task": "PG", "src": "The store closes at noon.", "hyp": "The shop shuts at twelve.", "tgt": "", "label": "Not Hallucination", "p(Hallucination)": 0.2}
"#;

const CONFIG: &str = r#"{
  "datasets": {"aware": "aware.jsonl"},
  "field_map": {},
  "methods": [
    {"name": "embed", "kind": "embedding", "preset": "vectors"},
    {"name": "nli", "kind": "nli", "preset": "entailment"}
  ],
  "presets": {
    "vectors": {
      "kind": "mock_embedding",
      "table": {
        "The dog is barking.": [1.0, 0.0],
        "The dog barks.": [1.0, 0.1],
        "It is snowing.": [0.0, 1.0],
        "The sun is shining.": [1.0, 0.0],
        "The store closes at noon.": [0.5, 0.5],
        "The shop shuts at twelve.": [0.5, 0.4]
      }
    },
    "entailment": {
      "kind": "mock_nli",
      "entries": [
        {"premise": "The dog is barking.", "hypothesis": "The dog barks.", "entailment": 0.95, "neutral": 0.04, "contradiction": 0.01},
        {"premise": "It is snowing.", "hypothesis": "The sun is shining.", "entailment": 0.02, "neutral": 0.08, "contradiction": 0.9},
        {"premise": "The store closes at noon.", "hypothesis": "The shop shuts at twelve.", "entailment": 0.85, "neutral": 0.1, "contradiction": 0.05}
      ]
    }
  }
}"#;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    fs::write(dir.path().join("aware.jsonl"), DATASET)?;
    fs::write(dir.path().join("config.json"), CONFIG)?;

    // Relative dataset paths resolve against the config file's directory.
    let config = RunConfig::load(&dir.path().join("config.json"))?;
    let out_dir = dir.path().join("out");
    let (report, files) = cmd_run(&config, &out_dir).await?;

    println!("verdict files written:");
    for file in &files {
        println!("  {}", file.file_name().unwrap().to_string_lossy());
    }

    println!("\n{}", render_report(&report, ReportFormat::Markdown)?);
    println!("report.md, report.csv and report.json land next to the verdicts;");
    println!("the JSON manifest pins each input file by sha256:");
    for (track, digest) in &report.manifest.datasets {
        println!(
            "  {track}: {}… ({} points)",
            &digest.sha256[..16],
            digest.points
        );
    }

    let sample = fs::read_to_string(out_dir.join("embed.aware.verdicts.jsonl"))?;
    println!("\nfirst verdict line of embed.aware.verdicts.jsonl:");
    println!("  {}", sample.lines().next().unwrap());
    Ok(())
}
