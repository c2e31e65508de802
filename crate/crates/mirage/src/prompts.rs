//! Prompt construction.
//!
//! The exact byte layout of every prompt is load-bearing: scripted chat
//! backends match on substrings of them, and the golden files under
//! `tests/golden/` pin them down. That includes the idiosyncratic wording
//! ("full supported", "explanations.Now") — don't tidy it up.

use serde::{Deserialize, Serialize};

/// The support question appended after the context block.
pub const QUESTION: &str = "Is the Sentence supported by the Context above?";

/// JSON-format instruction prepended to commentator prompts.
pub const COMMENTATOR_JSON_INSTRUCTION: &str = "Answer the following question using this JSON format: {answer: (yes, no or maybe), score: (an integer number between 1 and 5, which 1 is for not supported and 5 is for fully supported), description: (a description for your answer)}.";

/// Instruction opening a judge prompt that asks for a final label/score verdict.
pub const JUDGE_VERDICT_INSTRUCTION: &str = "Two experts are asked whether the given sentence supports the given context or not. We received two responses from these two experts. According to the explanations of these two experts, what is your decision? return your response in this JSON format {label: (yes/no), score: (an integer number between 1 and 5, which 1 is for not supported and 5 is for full supported), explanation: (text)}.";

/// First line of a judge prompt that asks for an expert index.
pub const EXPERT_PICK_HEADER: &str = "Answer the following question.";

/// Closing instruction of an expert-pick judge prompt.
pub const EXPERT_PICK_INSTRUCTION: &str = "I asked two experts to determine whether the Sentence is supported by the Context or not.\nAbove are their explanations.Now judge which one gave a better reason. Give me just the index of the best expert with no explanations using this JSON format: {index: (an integer number between 0 and 1, which 0 is for the first, 1 is for the second)}.";

/// The configurable pieces of the commentator prompt. Reference and hypothesis
/// text is interpolated verbatim — no escaping, no trimming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub context_label: String,
    pub sentence_label: String,
    pub question: String,
    pub json_instruction: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            context_label: "Context".into(),
            sentence_label: "Sentence".into(),
            question: QUESTION.into(),
            json_instruction: COMMENTATOR_JSON_INSTRUCTION.into(),
        }
    }
}

impl PromptTemplate {
    /// `Context: …\nSentence: …` without the trailing question.
    pub fn context_block(&self, reference: &str, hypothesis: &str) -> String {
        format!(
            "{}: {}\n{}: {}",
            self.context_label, reference, self.sentence_label, hypothesis
        )
    }

    /// The context block followed by the support question.
    pub fn question_block(&self, reference: &str, hypothesis: &str) -> String {
        format!(
            "{}\n{}",
            self.context_block(reference, hypothesis),
            self.question
        )
    }

    /// Full commentator prompt: JSON instruction, context block, question.
    pub fn render_commentator(&self, reference: &str, hypothesis: &str) -> String {
        format!(
            "{}\n{}",
            self.json_instruction,
            self.question_block(reference, hypothesis)
        )
    }
}

/// Prompt asking a judge for a final verdict over two expert explanations.
/// `question_block` repeats the context/question for the judge when enabled.
pub fn render_judge_verdict_prompt(
    question_block: Option<&str>,
    expert1_description: &str,
    expert2_description: &str,
) -> String {
    let mut out = String::from(JUDGE_VERDICT_INSTRUCTION);
    if let Some(block) = question_block {
        out.push('\n');
        out.push_str(block);
    }
    out.push_str("\nExpert 1: ");
    out.push_str(expert1_description);
    out.push_str("\nExpert 2: ");
    out.push_str(expert2_description);
    out
}

/// Prompt asking a judge to pick the more convincing of two experts
/// (index 0 or 1).
pub fn render_expert_pick_prompt(
    question_block: Option<&str>,
    expert0_description: &str,
    expert1_description: &str,
) -> String {
    let mut out = String::from(EXPERT_PICK_HEADER);
    if let Some(block) = question_block {
        out.push('\n');
        out.push_str(block);
    }
    out.push_str("\nExpert 0: ");
    out.push_str(expert0_description);
    out.push_str("\nExpert 1: ");
    out.push_str(expert1_description);
    out.push('\n');
    out.push_str(EXPERT_PICK_INSTRUCTION);
    out
}
