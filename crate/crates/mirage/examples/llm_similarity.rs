//! Ask a chat model how well a sentence is supported by its context, on a
//! 1-to-5 scale, and turn that into a hallucination probability:
//! `p = 1 − (score − 1) / 4`.
//!
//! Also demonstrates the parse-failure path: replies that never yield the
//! expected JSON are retried, then replaced by a neutral fallback verdict
//! flagged in the diagnostics.
//!
//! ```text
//! cargo run --example llm_similarity
//! ```

use mirage::backends::mock::{CallLog, MockChat, MockRule, PromptMatcher};
use mirage::dataset::{DataPoint, TaskKind};
use mirage::detectors::similarity::score_llm;
use mirage::prompts::PromptTemplate;

fn point(id: &str, hyp: &str, tgt: &str) -> DataPoint {
    DataPoint {
        id: id.into(),
        task: TaskKind::Dm,
        src: "the prompt that produced the hypothesis".into(),
        hyp: hyp.into(),
        tgt: tgt.into(),
        gold_label: None,
        gold_p: None,
        annotator_labels: None,
    }
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let template = PromptTemplate::default();
    let supported = point("supported", "A tiny gadget.", "A small gadget or device.");
    let invented = point(
        "invented",
        "A kind of sea mammal.",
        "A small gadget or device.",
    );

    println!("--- prompt sent for `{}` ---", supported.id);
    println!(
        "{}\n",
        template.render_commentator(supported.reference(), &supported.hyp)
    );

    let log = CallLog::new();
    let backend = MockChat::new("demo-chat")
        .with_log(log.clone())
        .rule(MockRule::text(
            PromptMatcher::contains(["A tiny gadget."]),
            r#"{"answer": "yes", "score": 5, "description": "Same meaning, shorter."}"#,
        ))
        .rule(MockRule::text(
            PromptMatcher::contains(["sea mammal"]),
            // Models often wrap the JSON in prose; extraction digs it out.
            r#"Sure! Here is my verdict: {"answer": "no", "score": 1, "description": "The context never mentions animals."} Hope that helps."#,
        ))
        .rule(MockRule::text(PromptMatcher::Any, "I refuse to answer in JSON."));

    for case in [&supported, &invented] {
        let verdict = score_llm(&backend, &template, case, 2).await?;
        println!(
            "{:>9}: p = {:.2}  label = {}  (answer {}, score {})",
            verdict.point_id,
            verdict.p.value(),
            verdict.label,
            verdict.diagnostics["answer"],
            verdict.diagnostics["score"],
        );
    }

    // A point whose replies never parse: two retries, then the fallback.
    let calls_before = log.len();
    let stubborn = point(
        "stubborn",
        "Something else entirely.",
        "A small gadget or device.",
    );
    let verdict = score_llm(&backend, &template, &stubborn, 2).await?;
    println!(
        "{:>9}: p = {:.2}  label = {}  parse_fallback = {}",
        verdict.point_id,
        verdict.p.value(),
        verdict.label,
        verdict
            .diagnostics
            .get("parse_fallback")
            .map(String::as_str)
            .unwrap_or("false"),
    );
    println!(
        "\nthe unparsable point used {} calls (1 attempt + 2 retries) before falling back",
        log.len() - calls_before
    );
    Ok(())
}
