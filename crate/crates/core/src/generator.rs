//! Generator-side evaluation: run a meta-prompt over a question set and
//! collect accuracy plus the mistake set.

use crate::accuracy::Accuracy;
use crate::backend::{answer_mcq, Backend};
use crate::error::{Result, SptError};
use crate::types::{EvalResult, ItemOutcome, McqItem, MetaPrompt, Mistake, NO_VALID_CHOICE};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const DEFAULT_HTTP_PARALLELISM: usize = 8;

/// Evaluates `prompt` over `items`. Item calls fan out over at most
/// `parallelism` workers; `per_item` preserves input order regardless of
/// execution order. Evaluation is all-or-nothing: any backend failure other
/// than an unparseable answer discards the partial result.
pub fn evaluate(
    backend: &Backend,
    prompt: &MetaPrompt,
    items: &[McqItem],
    parallelism: usize,
    re_asks: u32,
) -> Result<EvalResult> {
    if items.is_empty() {
        return Err(SptError::InvalidRequest("evaluate called with no items".into()));
    }

    let outcomes: Vec<i64> = run_items(backend, &prompt.text, items, parallelism, re_asks)?;

    let mut per_item = Vec::with_capacity(items.len());
    let mut mistakes = Vec::new();
    let mut correct_count = 0u64;
    for (item, &given_index) in items.iter().zip(&outcomes) {
        let correct = given_index >= 0 && given_index as usize == item.answer_index;
        if correct {
            correct_count += 1;
        } else {
            mistakes.push(Mistake::new(item.clone(), given_index)?);
        }
        per_item.push(ItemOutcome { item_id: item.id.clone(), given_index, correct });
    }

    Ok(EvalResult {
        prompt_origin: prompt.origin.clone(),
        per_item,
        accuracy: Accuracy::new(correct_count, items.len() as u64),
        mistakes,
    })
}

/// Evaluates `prompt` over the items embedded in a prior mistake set.
pub fn evaluate_on_mistakes(
    backend: &Backend,
    prompt: &MetaPrompt,
    mistakes: &[Mistake],
    parallelism: usize,
    re_asks: u32,
) -> Result<EvalResult> {
    if mistakes.is_empty() {
        return Err(SptError::InvalidRequest("evaluate_on_mistakes called with no mistakes".into()));
    }
    let items: Vec<McqItem> = mistakes.iter().map(|m| m.item.clone()).collect();
    evaluate(backend, prompt, &items, parallelism, re_asks)
}

/// Answers every item, assembling results by input index. An unparseable
/// answer becomes the sentinel; other errors abort the whole pass.
fn run_items(
    backend: &Backend,
    prompt_text: &str,
    items: &[McqItem],
    parallelism: usize,
    re_asks: u32,
) -> Result<Vec<i64>> {
    let workers = parallelism.clamp(1, items.len());
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<i64>>>> = items.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= items.len() {
                    break;
                }
                let outcome = match answer_mcq(backend, prompt_text, &items[index], re_asks) {
                    Ok(choice) => Ok(choice as i64),
                    Err(SptError::UnparseableAnswer) => Ok(NO_VALID_CHOICE),
                    Err(other) => Err(other),
                };
                *results[index].lock().unwrap() = Some(outcome);
            });
        }
    });

    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker covered every index"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockScript;
    use crate::types::PromptOrigin;

    fn items(n: usize) -> Vec<McqItem> {
        (0..n)
            .map(|i| {
                McqItem::new(
                    format!("q{i}"),
                    format!("Question {i}?"),
                    vec!["a".into(), "b".into(), "c".into()],
                    0,
                )
                .unwrap()
            })
            .collect()
    }

    fn scripted(prompt: &str, answers: &[(usize, i64)], n: usize) -> Backend {
        let mut script = MockScript::default();
        let all = items(n);
        for (i, given) in answers {
            script.add_answer(prompt, &all[*i].id, *given);
        }
        Backend::from_script(script)
    }

    #[test]
    fn counts_mistakes_and_accuracy() {
        let prompt = MetaPrompt::initial("p");
        // 2 of 4 correct
        let backend = scripted("p", &[(0, 0), (1, 0), (2, 1), (3, 2)], 4);
        let result = evaluate(&backend, &prompt, &items(4), 4, 1).unwrap();
        assert_eq!(result.accuracy, Accuracy::new(2, 4));
        assert_eq!(result.mistakes.len(), 2);
        assert_eq!(result.per_item.len(), 4);
        assert_eq!(result.per_item[2].given_index, 1);
        assert!(!result.per_item[2].correct);
    }

    #[test]
    fn all_correct_means_no_mistakes() {
        let prompt = MetaPrompt::initial("p");
        let backend = scripted("p", &[(0, 0), (1, 0), (2, 0)], 3);
        let result = evaluate(&backend, &prompt, &items(3), 8, 1).unwrap();
        assert!(result.mistakes.is_empty());
        assert!(result.accuracy.is_perfect());
    }

    #[test]
    fn unparseable_recorded_as_sentinel_mistake() {
        let prompt = MetaPrompt::initial("p");
        let backend = scripted("p", &[(0, 0), (1, -1), (2, 0)], 3);
        let result = evaluate(&backend, &prompt, &items(3), 1, 1).unwrap();
        assert_eq!(result.accuracy, Accuracy::new(2, 3));
        assert_eq!(result.mistakes[0].given_index, NO_VALID_CHOICE);
        assert_eq!(result.mistakes[0].given_text, "no valid choice");
    }

    #[test]
    fn conservation_of_counts() {
        let prompt = MetaPrompt::initial("p");
        let backend = scripted("p", &[(0, 1), (1, 0), (2, 2), (3, 0), (4, 1)], 5);
        let result = evaluate(&backend, &prompt, &items(5), 3, 1).unwrap();
        assert_eq!(result.accuracy.correct + result.mistakes.len() as u64, 5);
    }

    #[test]
    fn permutation_invariance() {
        let prompt = MetaPrompt::initial("p");
        let all = items(6);
        let answers = [(0, 1), (1, 0), (2, 0), (3, 2), (4, 0), (5, 1)];
        let backend = scripted("p", &answers, 6);

        let forward = evaluate(&backend, &prompt, &all, 2, 1).unwrap();
        let mut reversed_items = all.clone();
        reversed_items.reverse();
        let reversed = evaluate(&backend, &prompt, &reversed_items, 2, 1).unwrap();

        assert_eq!(forward.accuracy, reversed.accuracy);
        let ids = |r: &EvalResult| {
            let mut v: Vec<String> = r.mistakes.iter().map(|m| m.item.id.clone()).collect();
            v.sort();
            v
        };
        assert_eq!(ids(&forward), ids(&reversed));
    }

    #[test]
    fn empty_inputs_rejected() {
        let prompt = MetaPrompt::initial("p");
        let backend = Backend::from_script(MockScript::default());
        assert!(evaluate(&backend, &prompt, &[], 1, 1).is_err());
        assert!(evaluate_on_mistakes(&backend, &prompt, &[], 1, 1).is_err());
    }

    #[test]
    fn mock_miss_aborts_evaluation() {
        let prompt = MetaPrompt::initial("p");
        let backend = scripted("p", &[(0, 0)], 2); // q1 unscripted
        assert!(evaluate(&backend, &prompt, &items(2), 2, 1).is_err());
    }

    #[test]
    fn prompt_origin_flows_through() {
        let prompt = MetaPrompt::new("p", PromptOrigin::CorrectorCandidate { epoch: 3, candidate_index: 1 });
        let backend = scripted("p", &[(0, 0), (1, 0), (2, 0)], 3);
        let result = evaluate(&backend, &prompt, &items(3), 1, 1).unwrap();
        assert_eq!(result.prompt_origin, prompt.origin);
    }
}
