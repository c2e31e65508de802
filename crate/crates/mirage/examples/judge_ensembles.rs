//! Run the three multi-model compositions over one point and watch the
//! traffic.
//!
//! Every composition first collects commentator opinions (the same 1-to-5
//! prompt as the single-model detector, several samples per model, combined
//! by majority answer and lower-median score), then hands the opinions to a
//! judge model:
//!
//! * `mistral_judge` — mistral comments (3 samples) and zephyr comments
//!   (1 sample); mistral reads both summaries and issues a label/score.
//! * `zephyr_judge` — same commentators, zephyr issues the verdict.
//! * `expert_pick` — llama2 and mistral both comment (3 samples each);
//!   zephyr picks the more convincing expert, whose score becomes the
//!   verdict.
//!
//! ```text
//! cargo run --example judge_ensembles
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use mirage::backends::mock::{CallLog, MockChat, MockRule, PromptMatcher};
use mirage::backends::ChatBackend;
use mirage::dataset::{DataPoint, TaskKind};
use mirage::detectors::judge::{run_composition, Composition, JudgeOptions};

// Substrings unique to each prompt kind, used to route scripted replies.
const COMMENTATOR_CUE: &str = "(yes, no or maybe)";
const VERDICT_CUE: &str = "what is your decision?";
const PICK_CUE: &str = "index of the best expert";

fn commentator(reply: &str) -> MockRule {
    MockRule::text(PromptMatcher::contains([COMMENTATOR_CUE]), reply)
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let point = DataPoint {
        id: "demo".into(),
        task: TaskKind::Pg,
        src: "The library opens at nine and closes at five.".into(),
        hyp: "The library is open around the clock.".into(),
        tgt: String::new(),
        gold_label: None,
        gold_p: None,
        annotator_labels: None,
    };

    let log = CallLog::new();
    let mistral = MockChat::new("mistral-7b")
        .with_log(log.clone())
        .rule(commentator(
            r#"{"answer": "no", "score": 2, "description": "The context gives fixed hours."}"#,
        ))
        .rule(MockRule::text(
            PromptMatcher::contains([VERDICT_CUE]),
            r#"{"label": "no", "score": 1, "explanation": "Both experts doubt the claim."}"#,
        ));
    let zephyr = MockChat::new("zephyr-7b")
        .with_log(log.clone())
        .rule(commentator(
            r#"{"answer": "maybe", "score": 3, "description": "Hours are stated but could change."}"#,
        ))
        .rule(MockRule::text(
            PromptMatcher::contains([VERDICT_CUE]),
            r#"{"label": "no", "score": 2, "explanation": "Fixed opening hours contradict it."}"#,
        ))
        .rule(MockRule::text(
            PromptMatcher::contains([PICK_CUE]),
            r#"{"index": 1}"#,
        ));
    let llama2 = MockChat::new("llama-2-13b")
        .with_log(log.clone())
        .rule(commentator(
            r#"{"answer": "yes", "score": 4, "description": "Libraries are usually open."}"#,
        ));

    let backends: HashMap<String, Arc<dyn ChatBackend>> = [
        (
            "mistral".to_string(),
            Arc::new(mistral) as Arc<dyn ChatBackend>,
        ),
        (
            "zephyr".to_string(),
            Arc::new(zephyr) as Arc<dyn ChatBackend>,
        ),
        (
            "llama2".to_string(),
            Arc::new(llama2) as Arc<dyn ChatBackend>,
        ),
    ]
    .into_iter()
    .collect();

    let options = JudgeOptions::default();
    for composition in [
        Composition::MistralJudge,
        Composition::ZephyrJudge,
        Composition::ExpertPick,
    ] {
        let before = log.len();
        let verdict = run_composition(composition, &backends, &point, &options).await?;
        println!(
            "{:<13} p = {:.2}  label = {:<17} judge = {}",
            composition.id(),
            verdict.p.value(),
            verdict.label.to_string(),
            verdict.diagnostics["judge"],
        );
        if let Some(index) = verdict.diagnostics.get("judge_index") {
            println!(
                "              picked expert {index} ({})",
                verdict.diagnostics["selected_model"]
            );
        }
        let calls: Vec<String> = log.calls()[before..]
            .iter()
            .map(|c| format!("{}#{}", c.model, c.sample_index))
            .collect();
        println!("              calls: {}", calls.join(", "));
    }

    println!("\nroles required per composition:");
    for composition in [
        Composition::MistralJudge,
        Composition::ZephyrJudge,
        Composition::ExpertPick,
    ] {
        println!(
            "  {:<13} {:?}",
            composition.id(),
            composition.required_roles()
        );
    }
    Ok(())
}
