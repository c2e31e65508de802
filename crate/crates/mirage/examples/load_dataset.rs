//! Parse an annotated dataset from JSONL and inspect what each point offers.
//!
//! Shows the three task kinds and which side of the pair acts as the
//! reference, the optional gold annotations, and how a field map adapts
//! files whose keys differ from the canonical names.
//!
//! ```text
//! cargo run --example load_dataset
//! ```

use mirage::dataset::{parse_jsonl, FieldMap, Track};

const CANONICAL: &str = r#"
{"id": "mt-1", "task": "MT", "src": "Le chat dort.", "hyp": "The cat is sleeping.", "tgt": "The cat sleeps.", "label": "Not Hallucination", "p(Hallucination)": 0.0}
{"id": "dm-1", "task": "DM", "src": "What does <define> widget </define> mean?", "hyp": "A small mechanical device.", "tgt": "A small gadget or mechanical contrivance.", "label": "Not Hallucination", "p(Hallucination)": 0.2, "labels": [1, 1, 1, 1, 5]}
{"id": "pg-1", "task": "PG", "src": "The meeting was moved to Friday.", "hyp": "The meeting now happens on Monday.", "tgt": "", "label": "Hallucination", "p(Hallucination)": 0.8}
{"id": "mt-2", "task": "MT", "src": "Il pleut.", "hyp": "It is raining frogs.", "tgt": "It is raining."}
"#;

const RENAMED: &str = r#"
{"uid": "x-1", "task": "MT", "source": "Bonjour.", "generated": "Good day.", "target": "Hello.", "label": "Not Hallucination", "p(Hallucination)": 0.0}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = parse_jsonl(CANONICAL, Track::ModelAware, &FieldMap::default())?;
    println!(
        "loaded {} points for the {} track\n",
        dataset.points.len(),
        dataset.track
    );

    for point in &dataset.points {
        println!("{} ({:?})", point.id, point.task);
        println!("  hypothesis: {}", point.hyp);
        println!("  reference:  {}", point.reference());
        match (point.gold_label, point.gold_p) {
            (Some(label), Some(p)) => println!("  gold:       {label} (p = {p})"),
            _ => println!("  gold:       missing — evaluation will exclude this point"),
        }
        if let Some(labels) = &point.annotator_labels {
            println!("  annotators: {labels}");
        }
        println!();
    }

    // Files with different key names only need a canonical-to-actual map.
    let fields = FieldMap(
        [
            ("id", "uid"),
            ("src", "source"),
            ("hyp", "generated"),
            ("tgt", "target"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect(),
    );
    let renamed = parse_jsonl(RENAMED, Track::ModelAgnostic, &fields)?;
    let point = &renamed.points[0];
    println!(
        "field-mapped file: {} — \"{}\" against \"{}\"",
        point.id,
        point.hyp,
        point.reference()
    );
    Ok(())
}
