//! Commentator/judge ensembles: several chat models comment on a point, one
//! model arbitrates.
//!
//! Per point, two commentator models each produce one or more sampled
//! opinions, each model's samples fold into a single [`CombinedOpinion`], and
//! a judge model either issues its own label/score verdict over the two
//! explanations or picks the more convincing expert. Commentator gathers run
//! concurrently; the judge call strictly follows both.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::extract::{
    complete_structured, Answer, CommentatorReply, ExpertPickReply, JudgeVerdictReply, YesNo,
};
use crate::backends::ChatBackend;
use crate::dataset::DataPoint;
use crate::prompts::{render_expert_pick_prompt, render_judge_verdict_prompt, PromptTemplate};
use crate::scores::{
    classify, normalize_1to5, similarity_to_prob, BinaryLabel, DetectorVerdict, HallucinationProb,
};

use super::DetectorError;

/// Role names the compositions look up in the backend map.
pub const ROLE_MISTRAL: &str = "mistral";
pub const ROLE_ZEPHYR: &str = "zephyr";
pub const ROLE_LLAMA2: &str = "llama2";

/// Which models comment and who arbitrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// mistral (multi-sample) and zephyr (single-sample) comment; mistral
    /// issues the final label/score verdict.
    MistralJudge,
    /// Same commentators; zephyr issues the verdict.
    ZephyrJudge,
    /// llama2 and mistral comment (multi-sample each); zephyr picks the more
    /// convincing expert, whose combined score becomes the verdict.
    ExpertPick,
}

impl Composition {
    pub fn id(self) -> &'static str {
        match self {
            Self::MistralJudge => "mistral_judge",
            Self::ZephyrJudge => "zephyr_judge",
            Self::ExpertPick => "expert_pick",
        }
    }

    /// Roles that must be present in the backend map.
    pub fn required_roles(self) -> &'static [&'static str] {
        match self {
            Self::MistralJudge | Self::ZephyrJudge => &[ROLE_MISTRAL, ROLE_ZEPHYR],
            Self::ExpertPick => &[ROLE_LLAMA2, ROLE_MISTRAL, ROLE_ZEPHYR],
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One commentator sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommentatorOpinion {
    pub model: String,
    pub answer: Answer,
    pub score: u8,
    pub description: String,
    pub from_fallback: bool,
}

/// Several samples from one model folded into a single opinion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedOpinion {
    pub model: String,
    pub answer: Answer,
    pub score: u8,
    pub description: String,
    /// True only when every contributing sample fell back.
    pub from_fallback: bool,
    #[serde(skip)]
    pub samples: Vec<CommentatorOpinion>,
}

/// What the arbitrating model returned.
#[derive(Debug, Clone, PartialEq)]
pub enum JudgeDecision {
    /// A direct label/score verdict ([`Composition::MistralJudge`],
    /// [`Composition::ZephyrJudge`]).
    Verdict {
        label: YesNo,
        score: u8,
        explanation: String,
        from_fallback: bool,
    },
    /// The index of the chosen expert ([`Composition::ExpertPick`]).
    Pick { index: u8, from_fallback: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeOptions {
    /// Samples requested from each multi-sample commentator.
    pub n_samples: u32,
    /// Parse-failure retries per structured call.
    pub max_retries: u32,
    /// Repeat the context/question block inside judge prompts.
    pub include_question_block: bool,
    pub template: PromptTemplate,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        Self {
            n_samples: 3,
            max_retries: 2,
            include_question_block: true,
            template: PromptTemplate::default(),
        }
    }
}

/// Asks one model for `n_samples` opinions on a point, sequentially
/// (`sample_index` 0, 1, …). Unparseable samples become flagged fallbacks;
/// transport failures abort.
pub async fn gather_opinions(
    backend: &dyn ChatBackend,
    template: &PromptTemplate,
    point: &DataPoint,
    n_samples: u32,
    max_retries: u32,
) -> Result<Vec<CommentatorOpinion>, DetectorError> {
    let prompt = template.render_commentator(point.reference(), &point.hyp);
    let mut opinions = Vec::with_capacity(n_samples as usize);
    for sample_index in 0..n_samples {
        let reply: CommentatorReply =
            complete_structured(backend, &prompt, sample_index, max_retries)
                .await
                .map_err(|source| DetectorError::Backend {
                    point_id: point.id.clone(),
                    source,
                })?;
        opinions.push(CommentatorOpinion {
            model: backend.model_name().to_string(),
            answer: reply.answer,
            score: reply.score,
            description: reply.description,
            from_fallback: reply.from_fallback,
        });
    }
    Ok(opinions)
}

/// Folds one model's samples into a single opinion:
///
/// * answer — strict majority (more than half the samples); anything short of
///   that, including ties and three-way splits, is `maybe`;
/// * score — lower median (element at index `(n − 1) / 2` of the sorted scores);
/// * description — all sample descriptions joined with `" | "`.
pub fn combine_opinions(opinions: &[CommentatorOpinion]) -> Result<CombinedOpinion, DetectorError> {
    let first = opinions
        .first()
        .ok_or_else(|| DetectorError::Aggregation("no opinions to combine".into()))?;
    if opinions.iter().any(|o| o.model != first.model) {
        return Err(DetectorError::Aggregation(
            "opinions come from different models".into(),
        ));
    }
    let n = opinions.len();
    let count = |answer: Answer| opinions.iter().filter(|o| o.answer == answer).count();
    let answer = [Answer::Yes, Answer::No, Answer::Maybe]
        .into_iter()
        .find(|&candidate| count(candidate) * 2 > n)
        .unwrap_or(Answer::Maybe);
    let mut scores: Vec<u8> = opinions.iter().map(|o| o.score).collect();
    scores.sort_unstable();
    let score = scores[(n - 1) / 2];
    let description = opinions
        .iter()
        .map(|o| o.description.as_str())
        .collect::<Vec<_>>()
        .join(" | ");
    Ok(CombinedOpinion {
        model: first.model.clone(),
        answer,
        score,
        description,
        from_fallback: opinions.iter().all(|o| o.from_fallback),
        samples: opinions.to_vec(),
    })
}

/// Turns a combined opinion into a verdict. Only the 1-to-5 score feeds the
/// probability; the yes/no/maybe answer stays diagnostic.
pub fn opinion_to_verdict(
    opinion: &CombinedOpinion,
    point_id: &str,
) -> Result<DetectorVerdict, DetectorError> {
    let p = similarity_to_prob(normalize_1to5(opinion.score)?)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("answer".into(), opinion.answer.to_string());
    diagnostics.insert("score".into(), opinion.score.to_string());
    diagnostics.insert("description".into(), opinion.description.clone());
    if opinion.from_fallback {
        diagnostics.insert("parse_fallback".into(), "true".into());
    }
    Ok(DetectorVerdict::new(point_id, p, diagnostics))
}

/// True when the judge's yes/no label disagrees with the side of 0.5 its own
/// score lands on ("yes" should mean supported, i.e. not a hallucination).
fn label_conflicts_with_score(label: YesNo, p: HallucinationProb) -> bool {
    match label {
        YesNo::Yes => classify(p) == BinaryLabel::Hallucination,
        YesNo::No => classify(p) == BinaryLabel::NotHallucination,
    }
}

fn expert_diagnostics(experts: &[&CombinedOpinion]) -> BTreeMap<String, String> {
    let mut diagnostics = BTreeMap::new();
    for expert in experts {
        diagnostics.insert(
            format!("samples_{}", expert.model),
            serde_json::to_string(&expert.samples).expect("samples serialize"),
        );
        diagnostics.insert(
            format!("combined_{}", expert.model),
            serde_json::to_string(expert).expect("opinions serialize"),
        );
    }
    diagnostics
}

/// Runs one composition over one point.
///
/// The two commentator gathers run concurrently; the judge call starts only
/// after both finish (its prompt embeds their explanations). Judge scores map
/// to probabilities exactly like commentator scores. A judge whose label and
/// score disagree in polarity is trusted on the score and flagged; a judge
/// that never parses falls back (score 3 / expert 0) and is flagged.
pub async fn run_composition(
    composition: Composition,
    backends: &HashMap<String, Arc<dyn ChatBackend>>,
    point: &DataPoint,
    options: &JudgeOptions,
) -> Result<DetectorVerdict, DetectorError> {
    let role = |name: &str| -> Result<&Arc<dyn ChatBackend>, DetectorError> {
        backends
            .get(name)
            .ok_or_else(|| DetectorError::MissingRole {
                role: name.to_string(),
            })
    };
    let hard = |source| DetectorError::Backend {
        point_id: point.id.clone(),
        source,
    };
    let question_block = options.include_question_block.then(|| {
        options
            .template
            .question_block(point.reference(), &point.hyp)
    });

    match composition {
        Composition::MistralJudge | Composition::ZephyrJudge => {
            let mistral = role(ROLE_MISTRAL)?;
            let zephyr = role(ROLE_ZEPHYR)?;
            let (mistral_samples, zephyr_samples) = futures::try_join!(
                gather_opinions(
                    mistral.as_ref(),
                    &options.template,
                    point,
                    options.n_samples,
                    options.max_retries,
                ),
                gather_opinions(
                    zephyr.as_ref(),
                    &options.template,
                    point,
                    1,
                    options.max_retries
                ),
            )?;
            let expert1 = combine_opinions(&mistral_samples)?;
            let expert2 = combine_opinions(&zephyr_samples)?;
            let judge = if composition == Composition::MistralJudge {
                mistral
            } else {
                zephyr
            };
            let prompt = render_judge_verdict_prompt(
                question_block.as_deref(),
                &expert1.description,
                &expert2.description,
            );
            let reply: JudgeVerdictReply =
                complete_structured(judge.as_ref(), &prompt, 0, options.max_retries)
                    .await
                    .map_err(hard)?;
            let p = similarity_to_prob(normalize_1to5(reply.score)?)?;
            let mut diagnostics = expert_diagnostics(&[&expert1, &expert2]);
            diagnostics.insert("judge".into(), judge.model_name().to_string());
            diagnostics.insert("judge_label".into(), reply.label.to_string());
            diagnostics.insert("judge_score".into(), reply.score.to_string());
            diagnostics.insert("judge_explanation".into(), reply.explanation.clone());
            if reply.from_fallback {
                diagnostics.insert("judge_fallback".into(), "true".into());
            }
            if !reply.from_fallback && label_conflicts_with_score(reply.label, p) {
                diagnostics.insert("judge_label_score_conflict".into(), "true".into());
            }
            Ok(DetectorVerdict::new(point.id.clone(), p, diagnostics))
        }
        Composition::ExpertPick => {
            let llama2 = role(ROLE_LLAMA2)?;
            let mistral = role(ROLE_MISTRAL)?;
            let zephyr = role(ROLE_ZEPHYR)?;
            let (llama2_samples, mistral_samples) = futures::try_join!(
                gather_opinions(
                    llama2.as_ref(),
                    &options.template,
                    point,
                    options.n_samples,
                    options.max_retries,
                ),
                gather_opinions(
                    mistral.as_ref(),
                    &options.template,
                    point,
                    options.n_samples,
                    options.max_retries,
                ),
            )?;
            let expert0 = combine_opinions(&llama2_samples)?;
            let expert1 = combine_opinions(&mistral_samples)?;
            let prompt = render_expert_pick_prompt(
                question_block.as_deref(),
                &expert0.description,
                &expert1.description,
            );
            let reply: ExpertPickReply =
                complete_structured(zephyr.as_ref(), &prompt, 0, options.max_retries)
                    .await
                    .map_err(hard)?;
            let selected = if reply.index == 1 { &expert1 } else { &expert0 };
            let mut verdict = opinion_to_verdict(selected, &point.id)?;
            verdict
                .diagnostics
                .extend(expert_diagnostics(&[&expert0, &expert1]));
            verdict
                .diagnostics
                .insert("judge".into(), zephyr.model_name().to_string());
            verdict
                .diagnostics
                .insert("judge_index".into(), reply.index.to_string());
            verdict
                .diagnostics
                .insert("selected_model".into(), selected.model.clone());
            if reply.from_fallback {
                verdict
                    .diagnostics
                    .insert("judge_fallback".into(), "true".into());
            }
            Ok(verdict)
        }
    }
}
