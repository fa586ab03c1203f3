//! Domain types shared across the engine. All of these are immutable values
//! after construction and safe to share across evaluation workers.

use crate::accuracy::{Accuracy, Rational};
use crate::error::{Result, SptError};
use crate::segment::{normalize_whitespace, segment_sentences};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Sentinel recorded as the given index when the generator's reply contained
/// no valid choice number.
pub const NO_VALID_CHOICE: i64 = -1;
pub const NO_VALID_CHOICE_TEXT: &str = "no valid choice";

/// One multiple-choice question with 3 or 4 choices and a gold answer.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct McqItem {
    pub id: String,
    pub question: String,
    pub choices: Vec<String>,
    pub answer_index: usize,
}

impl McqItem {
    pub fn new(id: String, question: String, choices: Vec<String>, answer_index: usize) -> Result<Self> {
        let item = Self { id, question, choices, answer_index };
        item.validate()?;
        Ok(item)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| SptError::InvalidItem { id: self.id.clone(), reason };
        if self.id.trim().is_empty() {
            return Err(fail("empty id".into()));
        }
        if !(3..=4).contains(&self.choices.len()) {
            return Err(fail(format!("expected 3 or 4 choices, got {}", self.choices.len())));
        }
        if self.answer_index >= self.choices.len() {
            return Err(fail(format!(
                "answer_index {} out of range for {} choices",
                self.answer_index,
                self.choices.len()
            )));
        }
        let mut seen = HashSet::new();
        for choice in &self.choices {
            if !seen.insert(normalize_whitespace(choice)) {
                return Err(fail(format!("duplicate choice `{}`", choice.trim())));
            }
        }
        Ok(())
    }
}

/// Where a meta-prompt came from.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptOrigin {
    Initial,
    CorrectorCandidate { epoch: usize, candidate_index: usize },
    CorrectorSelfUpdate { epoch: usize },
}

/// A versioned prompt text with its derived sentence segmentation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MetaPrompt {
    pub text: String,
    pub sentences: Vec<String>,
    pub origin: PromptOrigin,
}

impl MetaPrompt {
    pub fn new(text: impl Into<String>, origin: PromptOrigin) -> Self {
        let text = text.into();
        let sentences = segment_sentences(&text);
        Self { text, sentences, origin }
    }

    pub fn initial(text: impl Into<String>) -> Self {
        Self::new(text, PromptOrigin::Initial)
    }

    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty()
    }

    /// Whitespace-normalized text, used for candidate deduplication.
    pub fn normalized_text(&self) -> String {
        normalize_whitespace(&self.text)
    }

    /// Text of this prompt with one sentence appended, as used when measuring
    /// a sentence's impact.
    pub fn text_with_sentence(&self, sentence: &str) -> String {
        if self.is_empty() {
            sentence.to_string()
        } else {
            format!("{} {}", self.text.trim(), sentence)
        }
    }
}

/// One generator mistake: an item plus the wrong choice it selected.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Mistake {
    pub item: McqItem,
    /// 0-based wrong index, or [`NO_VALID_CHOICE`] for an unparseable reply.
    pub given_index: i64,
    pub given_text: String,
}

impl Mistake {
    pub fn new(item: McqItem, given_index: i64) -> Result<Self> {
        if given_index == NO_VALID_CHOICE {
            return Ok(Self { item, given_index, given_text: NO_VALID_CHOICE_TEXT.to_string() });
        }
        let idx = usize::try_from(given_index)
            .ok()
            .filter(|i| *i < item.choices.len())
            .ok_or_else(|| SptError::InvalidItem {
                id: item.id.clone(),
                reason: format!("mistake index {given_index} out of range"),
            })?;
        if idx == item.answer_index {
            return Err(SptError::InvalidItem {
                id: item.id,
                reason: "mistake index equals the gold answer".into(),
            });
        }
        let given_text = item.choices[idx].clone();
        Ok(Self { item, given_index, given_text })
    }
}

/// Per-item outcome of one evaluation pass.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ItemOutcome {
    pub item_id: String,
    pub given_index: i64,
    pub correct: bool,
}

/// Result of evaluating one meta-prompt over a question set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EvalResult {
    pub prompt_origin: PromptOrigin,
    pub per_item: Vec<ItemOutcome>,
    pub accuracy: Accuracy,
    pub mistakes: Vec<Mistake>,
}

/// Which question set an impact score was measured on.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    TrainSet,
    MistakeSet,
}

/// One sentence's measured contribution: `impact = acc_after - acc_before`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ImpactEntry {
    pub sentence: String,
    pub impact: Rational,
    pub acc_before: Accuracy,
    pub acc_after: Accuracy,
    pub epoch: usize,
    pub eval_scope: EvalScope,
}

impl ImpactEntry {
    pub fn new(sentence: String, acc_before: Accuracy, acc_after: Accuracy, epoch: usize, eval_scope: EvalScope) -> Self {
        Self {
            sentence,
            impact: acc_after.diff(&acc_before),
            acc_before,
            acc_after,
            epoch,
            eval_scope,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ImpactLedger {
    pub entries: Vec<ImpactEntry>,
}

impl ImpactLedger {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Most recent entry for a sentence, if any.
    pub fn lookup(&self, sentence: &str) -> Option<&ImpactEntry> {
        self.entries.iter().rev().find(|e| e.sentence == sentence)
    }
}

/// One candidate meta-prompt together with its accuracy on the mistake set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CandidateRecord {
    pub prompt: MetaPrompt,
    pub mistake_set_accuracy: Accuracy,
}

/// Everything the trainer did during one epoch.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub generator_prompt: MetaPrompt,
    pub corrector_prompt: MetaPrompt,
    pub train_accuracy: Accuracy,
    pub candidates: Vec<CandidateRecord>,
    /// Index into `candidates`; `None` on a stalled or perfect epoch.
    pub selected: Option<usize>,
    pub stalled: bool,
    pub selected_prompt: MetaPrompt,
    pub corrector_update: Option<MetaPrompt>,
    pub test_accuracy: Option<Accuracy>,
    /// Item ids embedded in corrector requests this epoch (isolation audit).
    pub corrector_item_ids: Vec<String>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    Aborted,
}

/// Full training history; the unit of checkpointing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrainRun {
    pub schema: u32,
    pub config: crate::trainer::TrainerConfig,
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub current_generator_prompt: MetaPrompt,
    pub current_corrector_prompt: MetaPrompt,
    pub epochs: Vec<EpochRecord>,
    pub ledger: ImpactLedger,
    pub status: RunStatus,
}

pub const TRAIN_RUN_SCHEMA: u32 = 1;

impl TrainRun {
    pub fn validate(&self) -> Result<()> {
        if self.schema != TRAIN_RUN_SCHEMA {
            return Err(SptError::Checkpoint(format!(
                "unsupported schema {} (expected {TRAIN_RUN_SCHEMA})",
                self.schema
            )));
        }
        for (i, epoch) in self.epochs.iter().enumerate() {
            if epoch.epoch != i {
                return Err(SptError::Checkpoint(format!(
                    "epoch indices not contiguous: found {} at position {i}",
                    epoch.epoch
                )));
            }
            if let Some(sel) = epoch.selected {
                if sel >= epoch.candidates.len() {
                    return Err(SptError::Checkpoint(format!(
                        "epoch {i}: selected index {sel} out of range"
                    )));
                }
            }
        }
        Ok(())
    }
}
