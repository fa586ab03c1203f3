//! The training epoch loop: evaluate the current prompt, collect mistakes,
//! generate and select candidates, attribute impact per new sentence,
//! optionally let the corrector rewrite itself, and checkpoint.

use crate::accuracy::Accuracy;
use crate::backend::Backend;
use crate::corrector::{
    build_c_update_request, generate_candidates, parse_new_prompt, Variant,
};
use crate::datasets;
use crate::error::{Result, SptError};
use crate::generator::{evaluate, evaluate_on_mistakes};
use crate::types::{
    CandidateRecord, EpochRecord, EvalScope, ImpactEntry, ImpactLedger, McqItem, MetaPrompt,
    Mistake, PromptOrigin, RunStatus, TrainRun, TRAIN_RUN_SCHEMA,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::backend::BackendConfig;

/// Default initial corrector meta-prompt (c0).
pub const DEFAULT_INITIAL_CORRECTOR_PROMPT: &str = "You are an AI expert. You can generate new meta-prompts for another LLM so that this LLM is better at answering questions.";

pub const DEFAULT_N_CANDIDATES: usize = 3;
pub const DEFAULT_CORRECTOR_TEMPERATURE: f64 = 1.0;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrainerConfig {
    pub variant: Variant,
    pub n_candidates: usize,
    pub max_epochs: usize,
    pub dataset: PathBuf,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub generator_backend: BackendConfig,
    pub corrector_backend: BackendConfig,
    pub initial_generator_prompt: String,
    pub initial_corrector_prompt: String,
    pub evaluate_test_each_epoch: bool,
    pub impact_scope: EvalScope,
    pub checkpoint_dir: PathBuf,
    /// Sampling temperature for candidate-generating corrector calls;
    /// deterministic calls cannot yield n distinct candidates.
    pub corrector_temperature: f64,
    pub parallelism: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::SptP,
            n_candidates: DEFAULT_N_CANDIDATES,
            max_epochs: 10,
            dataset: PathBuf::new(),
            train_fraction: 0.8,
            split_seed: 0,
            generator_backend: BackendConfig::default(),
            corrector_backend: BackendConfig::default(),
            initial_generator_prompt: String::new(),
            initial_corrector_prompt: DEFAULT_INITIAL_CORRECTOR_PROMPT.to_string(),
            evaluate_test_each_epoch: true,
            impact_scope: EvalScope::MistakeSet,
            checkpoint_dir: PathBuf::from("runs"),
            corrector_temperature: DEFAULT_CORRECTOR_TEMPERATURE,
            parallelism: crate::generator::DEFAULT_HTTP_PARALLELISM,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates < 1 {
            return Err(SptError::InvalidConfig("n_candidates must be >= 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(SptError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(SptError::InvalidConfig("train_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// What an epoch ended with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochOutcome {
    /// Candidates were generated and one was selected.
    Advanced,
    /// No candidate fixed any mistake; the prompt was retained.
    Stalled,
    /// Training accuracy reached 1.0; the run is complete.
    Perfect,
}

pub struct Trainer {
    config: TrainerConfig,
    generator_backend: Backend,
    corrector_backend: Backend,
    train_items: Vec<McqItem>,
    test_items: Vec<McqItem>,
    run: TrainRun,
}

impl Trainer {
    /// Starts a fresh run: loads and splits the dataset, builds backends,
    /// and initializes the run state.
    pub fn new(config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        let items = datasets::load(&config.dataset)?;
        let (train_items, test_items) =
            datasets::split(&items, config.train_fraction, config.split_seed)?;
        let run = TrainRun {
            schema: TRAIN_RUN_SCHEMA,
            config: config.clone(),
            seed: config.split_seed,
            train_ids: train_items.iter().map(|i| i.id.clone()).collect(),
            test_ids: test_items.iter().map(|i| i.id.clone()).collect(),
            current_generator_prompt: MetaPrompt::initial(&config.initial_generator_prompt),
            current_corrector_prompt: MetaPrompt::initial(&config.initial_corrector_prompt),
            epochs: Vec::new(),
            ledger: ImpactLedger::default(),
            status: RunStatus::Running,
        };
        Self::from_parts(config, run, train_items, test_items)
    }

    /// Resumes from the latest checkpoint in `checkpoint_dir`. The dataset is
    /// re-loaded from the path in the config snapshot and the original split
    /// is reconstructed from the recorded item ids.
    pub fn resume(checkpoint_dir: &Path) -> Result<Self> {
        let run = load_latest_checkpoint(checkpoint_dir)?;
        let config = run.config.clone();
        let items = datasets::load(&config.dataset)?;
        let by_id: HashMap<&str, &McqItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
        let pick = |ids: &[String]| -> Result<Vec<McqItem>> {
            ids.iter()
                .map(|id| {
                    by_id.get(id.as_str()).map(|i| (*i).clone()).ok_or_else(|| {
                        SptError::Checkpoint(format!("dataset no longer contains item `{id}`"))
                    })
                })
                .collect()
        };
        let train_items = pick(&run.train_ids)?;
        let test_items = pick(&run.test_ids)?;
        Self::from_parts(config, run, train_items, test_items)
    }

    fn from_parts(
        config: TrainerConfig,
        run: TrainRun,
        train_items: Vec<McqItem>,
        test_items: Vec<McqItem>,
    ) -> Result<Self> {
        run.validate()?;
        Ok(Self {
            generator_backend: Backend::from_config(&config.generator_backend)?,
            corrector_backend: Backend::from_config(&config.corrector_backend)?,
            config,
            train_items,
            test_items,
            run,
        })
    }

    pub fn run(&self) -> &TrainRun {
        &self.run
    }

    pub fn train_items(&self) -> &[McqItem] {
        &self.train_items
    }

    pub fn test_items(&self) -> &[McqItem] {
        &self.test_items
    }

    /// Runs epochs until perfect training accuracy or `max_epochs`, then
    /// marks the run completed. Each epoch checkpoints on success, so a
    /// failure mid-epoch leaves the previous checkpoint intact.
    pub fn train(&mut self) -> Result<&TrainRun> {
        while self.run.status == RunStatus::Running && self.run.epochs.len() < self.config.max_epochs
        {
            self.run_epoch()?;
        }
        if self.run.status == RunStatus::Running {
            self.run.status = RunStatus::Completed;
            self.write_checkpoint()?;
        }
        Ok(&self.run)
    }

    /// Executes one full epoch and appends its record.
    pub fn run_epoch(&mut self) -> Result<EpochOutcome> {
        if self.run.status != RunStatus::Running {
            return Err(SptError::InvalidRequest("run is not in the running state".into()));
        }
        let epoch = self.run.epochs.len();
        let p_i = self.run.current_generator_prompt.clone();
        let c_i = self.run.current_corrector_prompt.clone();

        let re_asks = self.config.generator_backend.re_asks;
        let train_eval =
            evaluate(&self.generator_backend, &p_i, &self.train_items, self.config.parallelism, re_asks)?;

        if train_eval.mistakes.is_empty() {
            // Perfect training accuracy: nothing left to correct.
            let test_accuracy = self.maybe_eval_test(&p_i)?;
            self.run.epochs.push(EpochRecord {
                epoch,
                generator_prompt: p_i.clone(),
                corrector_prompt: c_i,
                train_accuracy: train_eval.accuracy,
                candidates: Vec::new(),
                selected: None,
                stalled: false,
                selected_prompt: p_i,
                corrector_update: None,
                test_accuracy,
                corrector_item_ids: Vec::new(),
            });
            self.run.status = RunStatus::Completed;
            self.write_checkpoint()?;
            return Ok(EpochOutcome::Perfect);
        }

        let mistakes = train_eval.mistakes;
        let ledger_arg = match self.config.variant {
            Variant::SptImp => Some(&self.run.ledger),
            _ => None,
        };
        let candidates = generate_candidates(
            &self.corrector_backend,
            self.config.variant,
            &c_i,
            &p_i,
            &mistakes,
            self.config.n_candidates,
            ledger_arg,
            epoch,
            self.config.corrector_temperature,
        )?;

        let candidate_evals: Vec<_> = candidates
            .iter()
            .map(|candidate| {
                evaluate_on_mistakes(
                    &self.generator_backend,
                    candidate,
                    &mistakes,
                    self.config.parallelism,
                    re_asks,
                )
            })
            .collect::<Result<_>>()?;

        let candidate_records: Vec<CandidateRecord> = candidates
            .iter()
            .zip(&candidate_evals)
            .map(|(prompt, eval)| CandidateRecord {
                prompt: prompt.clone(),
                mistake_set_accuracy: eval.accuracy,
            })
            .collect();

        // argmax over mistake-set accuracy, ties broken by lowest index.
        let best_index = select_best(&candidate_records.iter().map(|c| c.mistake_set_accuracy).collect::<Vec<_>>())
            .expect("candidates are non-empty");
        let stalled = candidate_records[best_index].mistake_set_accuracy.is_zero();
        let (selected, p_star) = if stalled {
            (None, p_i.clone())
        } else {
            (Some(best_index), candidates[best_index].clone())
        };

        let impact_entries = compute_impact_scores(
            &self.generator_backend,
            &p_i,
            &p_star,
            &mistakes,
            self.config.impact_scope,
            &self.train_items,
            train_eval.accuracy,
            epoch,
            self.config.parallelism,
            re_asks,
        )?;
        self.run.ledger.entries.extend(impact_entries);

        let corrector_update = self.maybe_update_corrector(
            epoch,
            &c_i,
            &p_i,
            &p_star,
            &mistakes,
            stalled,
            selected.map(|i| &candidate_evals[i].mistakes),
        )?;

        let test_accuracy = self.maybe_eval_test(&p_star)?;

        let c_next = corrector_update.clone().unwrap_or_else(|| c_i.clone());
        self.run.epochs.push(EpochRecord {
            epoch,
            generator_prompt: p_i,
            corrector_prompt: c_i,
            train_accuracy: train_eval.accuracy,
            candidates: candidate_records,
            selected,
            stalled,
            selected_prompt: p_star.clone(),
            corrector_update,
            test_accuracy,
            corrector_item_ids: mistakes.iter().map(|m| m.item.id.clone()).collect(),
        });
        self.run.current_generator_prompt = p_star;
        self.run.current_corrector_prompt = c_next;
        self.write_checkpoint()?;

        Ok(if stalled { EpochOutcome::Stalled } else { EpochOutcome::Advanced })
    }

    /// Corrector self-update. For spt-pc the trigger is items failed by both
    /// p_i and p_i* (skipped when none); for spt-imp it runs whenever the
    /// impact ledger is non-empty.
    #[allow(clippy::too_many_arguments)]
    fn maybe_update_corrector(
        &self,
        epoch: usize,
        c_i: &MetaPrompt,
        p_i: &MetaPrompt,
        p_star: &MetaPrompt,
        mistakes: &[Mistake],
        stalled: bool,
        p_star_mistakes: Option<&Vec<Mistake>>,
    ) -> Result<Option<MetaPrompt>> {
        let request = match self.config.variant {
            Variant::SptPc => {
                // Repeated mistakes come from step (3)'s evaluation of p_i*
                // on m_{p_i}; on a stalled epoch p_i* = p_i fails all of them.
                let repeated: &[Mistake] = if stalled {
                    mistakes
                } else {
                    p_star_mistakes.map(|m| m.as_slice()).unwrap_or(mistakes)
                };
                if repeated.is_empty() {
                    return Ok(None);
                }
                build_c_update_request(Variant::SptPc, c_i, p_i, p_star, repeated, None)?
            }
            Variant::SptImp => {
                if self.run.ledger.is_empty() {
                    return Ok(None);
                }
                build_c_update_request(Variant::SptImp, c_i, p_i, p_star, &[], Some(&self.run.ledger))?
            }
            _ => return Ok(None),
        };
        let response = self
            .corrector_backend
            .complete(&request, self.config.corrector_temperature)?;
        let parsed = parse_new_prompt(&response)?;
        Ok(Some(MetaPrompt::new(parsed.text, PromptOrigin::CorrectorSelfUpdate { epoch })))
    }

    fn maybe_eval_test(&self, prompt: &MetaPrompt) -> Result<Option<Accuracy>> {
        if !self.config.evaluate_test_each_epoch || self.test_items.is_empty() {
            return Ok(None);
        }
        let eval = evaluate(
            &self.generator_backend,
            prompt,
            &self.test_items,
            self.config.parallelism,
            self.config.generator_backend.re_asks,
        )?;
        Ok(Some(eval.accuracy))
    }

    fn write_checkpoint(&self) -> Result<()> {
        write_checkpoint(&self.run, &self.config.checkpoint_dir)
    }

    /// Best test accuracy seen so far and the epoch that achieved it.
    pub fn best_test_accuracy(&self) -> Option<(usize, Accuracy)> {
        self.run
            .epochs
            .iter()
            .filter_map(|e| e.test_accuracy.map(|a| (e.epoch, a)))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
    }
}

/// First-argmax selection over candidate accuracies.
pub fn select_best(accuracies: &[Accuracy]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, acc) in accuracies.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if *acc > accuracies[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Measures the impact of every sentence p_i* adds over p_i: the exact
/// accuracy change from appending that one sentence to p_i, on the chosen
/// scope set. On the mistake set, p_i's accuracy is 0 by construction; on the
/// train set the already-computed epoch accuracy is reused.
#[allow(clippy::too_many_arguments)]
pub fn compute_impact_scores(
    backend: &Backend,
    p_i: &MetaPrompt,
    p_star: &MetaPrompt,
    mistakes: &[Mistake],
    scope: EvalScope,
    train_items: &[McqItem],
    train_accuracy: Accuracy,
    epoch: usize,
    parallelism: usize,
    re_asks: u32,
) -> Result<Vec<ImpactEntry>> {
    let new_sentences: Vec<&String> = p_star
        .sentences
        .iter()
        .filter(|s| !p_i.sentences.contains(s))
        .collect();
    if new_sentences.is_empty() {
        return Ok(Vec::new());
    }

    let (scope_items, acc_before): (Vec<McqItem>, Accuracy) = match scope {
        EvalScope::MistakeSet => (
            mistakes.iter().map(|m| m.item.clone()).collect(),
            Accuracy::new(0, mistakes.len() as u64),
        ),
        EvalScope::TrainSet => (train_items.to_vec(), train_accuracy),
    };

    let mut entries = Vec::with_capacity(new_sentences.len());
    for sentence in new_sentences {
        let probe = MetaPrompt::new(p_i.text_with_sentence(sentence), p_star.origin.clone());
        let eval = evaluate(backend, &probe, &scope_items, parallelism, re_asks)?;
        entries.push(ImpactEntry::new(
            sentence.clone(),
            acc_before,
            eval.accuracy,
            epoch,
            scope,
        ));
    }
    Ok(entries)
}

const LATEST_POINTER: &str = "latest";

/// Writes the run as `epoch_NNNN.json` plus a `latest` pointer file, both
/// atomically (write-temp-then-rename).
pub fn write_checkpoint(run: &TrainRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = format!("epoch_{:04}.json", run.epochs.len());
    let body = serde_json::to_string_pretty(run)?;
    atomic_write(&dir.join(&name), body.as_bytes())?;
    atomic_write(&dir.join(LATEST_POINTER), name.as_bytes())?;
    Ok(())
}

pub fn load_latest_checkpoint(dir: &Path) -> Result<TrainRun> {
    let pointer = dir.join(LATEST_POINTER);
    if !pointer.exists() {
        return Err(SptError::Checkpoint(format!(
            "no `latest` pointer in {}",
            dir.display()
        )));
    }
    let name = std::fs::read_to_string(&pointer)?;
    load_checkpoint(&dir.join(name.trim()))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainRun> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| SptError::Checkpoint(format!("{}: {e}", path.display())))?;
    let run: TrainRun = serde_json::from_str(&data)?;
    run.validate()?;
    Ok(run)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("checkpoint")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
