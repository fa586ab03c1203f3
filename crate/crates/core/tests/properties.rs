//! Property tests for the spec-level invariants: segmentation idempotence,
//! parser totality, parse/print inversion, split partitioning, and exact
//! ledger arithmetic.

mod common;

use common::synthetic_items;
use proptest::prelude::*;
use spt_core::accuracy::{Accuracy, Rational};
use spt_core::backend::extract_choice_index;
use spt_core::corrector::parse_new_prompt;
use spt_core::datasets::split;
use spt_core::segment::segment_sentences;
use spt_core::types::{EvalScope, ImpactEntry};
use std::collections::HashSet;

proptest! {
    /// segment(join(segment(t))) == segment(t)
    #[test]
    fn segmentation_is_idempotent(text in "[ a-zA-Z0-9.!?,']{0,200}") {
        let once = segment_sentences(&text);
        let rejoined = once.join(" ");
        prop_assert_eq!(segment_sentences(&rejoined), once.clone());
        for sentence in &once {
            prop_assert!(!sentence.trim().is_empty());
        }
    }

    /// The extractor never yields an out-of-range index, whatever the input.
    #[test]
    fn extractor_is_total(reply in ".{0,120}", n_choices in 3usize..=4) {
        if let Some(index) = extract_choice_index(&reply, n_choices) {
            prop_assert!(index < n_choices);
        }
    }

    /// parse_new_prompt("New prompt: " + s) == s for marker-free single-line s.
    #[test]
    fn parse_inverts_wrapping(body in "[a-zA-Z0-9 ,.]{1,80}") {
        let s = body.trim().to_string();
        prop_assume!(!s.is_empty());
        prop_assume!(!s.to_lowercase().contains("new prompt:"));
        let parsed = parse_new_prompt(&format!("New prompt: {s}")).unwrap();
        prop_assert_eq!(parsed.text, s);
        prop_assert!(!parsed.marker_missing);
    }

    /// train and test partition the input for all seeds and fractions.
    #[test]
    fn split_partitions_items(n in 2usize..60, seed in any::<u64>(), numerator in 1usize..99) {
        let fraction = numerator as f64 / 100.0;
        let items = synthetic_items(n);
        let (train, test) = split(&items, fraction, seed).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        prop_assert_eq!(train.len() + test.len(), n);
        let all: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
        let train_ids: HashSet<&str> = train.iter().map(|i| i.id.as_str()).collect();
        let test_ids: HashSet<&str> = test.iter().map(|i| i.id.as_str()).collect();
        prop_assert!(train_ids.is_disjoint(&test_ids));
        let union: HashSet<&str> = train_ids.union(&test_ids).copied().collect();
        prop_assert_eq!(union, all);
    }

    /// acc_before + impact == acc_after exactly, for any count pair.
    #[test]
    fn ledger_arithmetic_is_exact(
        before in 0u64..=50, total_b in 1u64..=50,
        after in 0u64..=50, total_a in 1u64..=50,
    ) {
        let acc_before = Accuracy::new(before.min(total_b), total_b);
        let acc_after = Accuracy::new(after.min(total_a), total_a);
        let entry = ImpactEntry::new("s".into(), acc_before, acc_after, 0, EvalScope::TrainSet);
        prop_assert!(entry.impact.as_f64() >= -1.0 && entry.impact.as_f64() <= 1.0);
        // acc_before + impact, as a rational, equals acc_after
        let before_rational = Rational::new(acc_before.correct as i64, acc_before.total as i64);
        let after_rational = Rational::new(acc_after.correct as i64, acc_after.total as i64);
        prop_assert_eq!(before_rational.add(&entry.impact), after_rational);
    }
}

#[test]
fn train_run_serialization_roundtrip() {
    // exercised structurally in trainer_loop::checkpoint_roundtrip_is_field_exact;
    // here just pin the schema marker.
    assert_eq!(spt_core::types::TRAIN_RUN_SCHEMA, 1);
}
