//! Impact annotation: tag each sentence of a prompt with the accuracy change
//! it was measured to cause, e.g. `"You are an AI assistant."; impact score: 0.2`.

use crate::accuracy::format_impact;
use crate::types::{ImpactLedger, MetaPrompt};

/// Renders the prompt with every ledger-matched sentence followed by its
/// impact tag. Sentences without a ledger entry are emitted unchanged, in
/// order. Matching uses the most recent ledger entry per sentence.
pub fn annotate_with_impact(prompt: &MetaPrompt, ledger: &ImpactLedger) -> String {
    prompt
        .sentences
        .iter()
        .map(|sentence| match ledger.lookup(sentence) {
            Some(entry) => format!("\"{}\"; impact score: {}", sentence, format_impact(&entry.impact)),
            None => sentence.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a ledger as a compact map, the form embedded in corrector
/// requests: `{"You are an AI assistant": 0.2}`; `{}` when empty.
pub fn render_impact_map(ledger: &ImpactLedger) -> String {
    let body = ledger
        .entries
        .iter()
        .map(|e| format!("\"{}\": {}", e.sentence, format_impact(&e.impact)))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{body}}}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accuracy::Accuracy;
    use crate::types::{EvalScope, ImpactEntry};

    fn ledger(entries: &[(&str, u64, u64, u64)]) -> ImpactLedger {
        ImpactLedger {
            entries: entries
                .iter()
                .map(|(s, before, after, total)| {
                    ImpactEntry::new(
                        s.to_string(),
                        Accuracy::new(*before, *total),
                        Accuracy::new(*after, *total),
                        0,
                        EvalScope::TrainSet,
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn matched_sentence_gets_tag() {
        let prompt = MetaPrompt::initial("You are an AI assistant.");
        let l = ledger(&[("You are an AI assistant.", 5, 7, 10)]);
        assert_eq!(
            annotate_with_impact(&prompt, &l),
            "\"You are an AI assistant.\"; impact score: 0.2"
        );
    }

    #[test]
    fn empty_ledger_leaves_prompt_unchanged() {
        let prompt = MetaPrompt::initial("Be precise. Avoid bias.");
        assert_eq!(
            annotate_with_impact(&prompt, &ImpactLedger::default()),
            "Be precise. Avoid bias."
        );
    }

    #[test]
    fn two_sentences_tagged_in_order() {
        let prompt = MetaPrompt::initial("Be precise. Avoid bias.");
        let l = ledger(&[("Be precise.", 0, 2, 20), ("Avoid bias.", 1, 0, 20)]);
        assert_eq!(
            annotate_with_impact(&prompt, &l),
            "\"Be precise.\"; impact score: 0.1 \"Avoid bias.\"; impact score: -0.05"
        );
    }

    #[test]
    fn impact_map_rendering() {
        assert_eq!(render_impact_map(&ImpactLedger::default()), "{}");
        let l = ledger(&[("You are an AI assistant", 5, 7, 10)]);
        assert_eq!(render_impact_map(&l), "{\"You are an AI assistant\": 0.2}");
    }
}
