//! Regenerates the committed test fixtures under `tests/fixtures` and
//! `tests/goldens`. The training scenario (which candidate fixes which
//! items, per-epoch accuracies) is designed by hand below; this tool only
//! mechanizes the request fingerprinting so the mock script stays in sync
//! with the template builders.
//!
//! Run from the workspace root:
//!     cargo run -p spt-core --example gen_fixtures

use serde_json::json;
use spt_core::accuracy::Accuracy;
use spt_core::backend::MockScript;
use spt_core::corrector::{build_c_update_request, build_p_update_request, Variant};
use spt_core::datasets;
use spt_core::types::{EvalScope, ImpactEntry, ImpactLedger, McqItem, MetaPrompt, Mistake};
use std::path::Path;

const DATASET_SIZE: usize = 25;
const TRAIN_FRACTION: f64 = 0.8;
const SPLIT_SEED: u64 = 7;

const P0: &str = "";
const C0: &str = spt_core::trainer::DEFAULT_INITIAL_CORRECTOR_PROMPT;

const CAND_A0: &str = "Answer carefully.";
const CAND_B0: &str = "Read each question carefully.";
const CAND_C0: &str = "Think before answering.";
const SENTENCE_1: &str = "Double-check your reasoning.";
const CAND_B1: &str = "Read each question carefully. Be precise.";
const CAND_C1: &str = "Read each question carefully. Avoid bias.";

fn items() -> Vec<McqItem> {
    (0..DATASET_SIZE)
        .map(|i| {
            McqItem::new(
                format!("q{i:03}"),
                format!("Question {i}: which option is marked correct?"),
                vec![format!("alpha {i}"), format!("beta {i}"), format!("gamma {i}")],
                i % 3,
            )
            .unwrap()
        })
        .collect()
}

fn wrong_answer(item: &McqItem) -> i64 {
    ((item.answer_index + 1) % item.choices.len()) as i64
}

/// Scripts `prompt` answering each item: correct when `fixed` contains the
/// id, otherwise the designated wrong choice.
fn script_answers(script: &mut MockScript, prompt: &str, items: &[McqItem], fixed: &[&str]) {
    for item in items {
        let answer = if fixed.contains(&item.id.as_str()) {
            item.answer_index as i64
        } else {
            wrong_answer(item)
        };
        script.add_answer(prompt, &item.id, answer);
    }
}

fn mistakes_of(items: &[McqItem], fixed: &[&str]) -> Vec<Mistake> {
    items
        .iter()
        .filter(|i| !fixed.contains(&i.id.as_str()))
        .map(|i| Mistake::new(i.clone(), wrong_answer(i)).unwrap())
        .collect()
}

fn main() {
    let fixtures = Path::new("crates/core/tests/fixtures");
    let goldens = Path::new("crates/core/tests/goldens");
    std::fs::create_dir_all(fixtures).unwrap();
    std::fs::create_dir_all(goldens).unwrap();

    let all = items();
    let jsonl: String = all
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    std::fs::write(fixtures.join("e2e_dataset.jsonl"), jsonl).unwrap();

    let (train, test) = datasets::split(&all, TRAIN_FRACTION, SPLIT_SEED).unwrap();
    assert_eq!(train.len(), 20);
    assert_eq!(test.len(), 5);
    let train_ids: Vec<&str> = train.iter().map(|i| i.id.as_str()).collect();
    let test_ids: Vec<&str> = test.iter().map(|i| i.id.as_str()).collect();

    // Epoch 0: p0 answers the first 12 train items correctly; the last 8
    // (in train order) are the mistake set M0.
    let p0_correct = &train_ids[..12];
    let m0_ids = &train_ids[12..];
    // Epoch 0 candidates: A0 fixes 2/8, B0 and C0 fix 4/8 -> B0 selected
    // (first argmax, index 1).
    let a0_fixes: Vec<&str> = [p0_correct, &m0_ids[..2]].concat();
    let b0_fixes: Vec<&str> = [p0_correct, &m0_ids[..4]].concat();
    let c0_fixes: Vec<&str> = [p0_correct, &m0_ids[4..]].concat();
    // Epoch 1: p1 = B0 leaves M1 = M0[4..]. A1 = B0 + one sentence fixes
    // everything (selected, index 0); B1 fixes 2/4, C1 fixes 1/4.
    let m1_ids = &m0_ids[4..];
    let cand_a1 = format!("{CAND_B0} {SENTENCE_1}");
    let a1_fixes: Vec<&str> = train_ids.clone();
    let b1_fixes: Vec<&str> = [&b0_fixes[..], &m1_ids[..2]].concat();
    let c1_fixes: Vec<&str> = [&b0_fixes[..], &m1_ids[..1]].concat();
    // Test-set behavior: B0 answers 3/5, A1 answers 4/5.
    let b0_test_fixes = &test_ids[..3];
    let a1_test_fixes = &test_ids[..4];

    let mut script = MockScript::default();
    script_answers(&mut script, P0, &train, p0_correct);
    script_answers(&mut script, CAND_A0, &train[12..], &a0_fixes);
    script_answers(&mut script, CAND_B0, &train, &b0_fixes);
    script_answers(&mut script, CAND_C0, &train[12..], &c0_fixes);
    script_answers(&mut script, &cand_a1, &train, &a1_fixes);
    script_answers(&mut script, CAND_B1, &train[16..], &b1_fixes);
    script_answers(&mut script, CAND_C1, &train[16..], &c1_fixes);
    script_answers(&mut script, CAND_B0, &test, b0_test_fixes);
    script_answers(&mut script, &cand_a1, &test, a1_test_fixes);

    // Corrector requests: one fingerprint per epoch, three replies consumed
    // in request order.
    let p0 = MetaPrompt::initial(P0);
    let c0 = MetaPrompt::initial(C0);
    let m0 = mistakes_of(&train, p0_correct);
    let epoch0_request = build_p_update_request(Variant::SptP, &c0, &p0, &m0, None).unwrap();
    script.add_completion(
        &epoch0_request,
        vec![
            format!("New prompt: {CAND_A0}"),
            format!("New prompt: {CAND_B0}"),
            format!("New prompt: {CAND_C0}"),
        ],
    );
    let p1 = MetaPrompt::initial(CAND_B0);
    let m1 = mistakes_of(&train, &b0_fixes);
    let epoch1_request = build_p_update_request(Variant::SptP, &c0, &p1, &m1, None).unwrap();
    script.add_completion(
        &epoch1_request,
        vec![
            format!("New prompt: {cand_a1}"),
            format!("New prompt: {CAND_B1}"),
            format!("New prompt: {CAND_C1}"),
        ],
    );

    std::fs::write(
        fixtures.join("e2e_mock.json"),
        serde_json::to_string_pretty(&script).unwrap(),
    )
    .unwrap();

    // Hand-designed expected trace for the run above.
    let trace = json!({
        "epochs": [
            {
                "train_accuracy": {"correct": 12, "total": 20},
                "candidate_accuracies": [
                    {"correct": 2, "total": 8},
                    {"correct": 4, "total": 8},
                    {"correct": 4, "total": 8}
                ],
                "selected": 1,
                "stalled": false,
                "selected_prompt": CAND_B0,
                "test_accuracy": {"correct": 3, "total": 5}
            },
            {
                "train_accuracy": {"correct": 16, "total": 20},
                "candidate_accuracies": [
                    {"correct": 4, "total": 4},
                    {"correct": 2, "total": 4},
                    {"correct": 1, "total": 4}
                ],
                "selected": 0,
                "stalled": false,
                "selected_prompt": cand_a1,
                "test_accuracy": {"correct": 4, "total": 5}
            },
            {
                "train_accuracy": {"correct": 20, "total": 20},
                "candidate_accuracies": [],
                "selected": null,
                "stalled": false,
                "selected_prompt": cand_a1,
                "test_accuracy": {"correct": 4, "total": 5}
            }
        ],
        "impact": [
            {"sentence": CAND_B0, "acc_before": {"correct": 0, "total": 8}, "acc_after": {"correct": 4, "total": 8}, "epoch": 0},
            {"sentence": SENTENCE_1, "acc_before": {"correct": 0, "total": 4}, "acc_after": {"correct": 4, "total": 4}, "epoch": 1}
        ],
        "final_status": "completed"
    });
    std::fs::write(
        fixtures.join("e2e_expected_trace.json"),
        serde_json::to_string_pretty(&trace).unwrap(),
    )
    .unwrap();

    write_template_goldens(goldens);
    eprintln!("fixtures written");
}

/// One small, fixed substitution scenario per corrector template.
fn write_template_goldens(dir: &Path) {
    let item = McqItem::new(
        "g1".to_string(),
        "What color is the sky?".to_string(),
        vec!["green".to_string(), "blue".to_string(), "red".to_string()],
        1,
    )
    .unwrap();
    let mistakes = vec![Mistake::new(item, 2).unwrap()];
    let c_i = MetaPrompt::initial(C0);
    let p_i = MetaPrompt::initial("Be precise.");
    let p_star = MetaPrompt::initial("Be precise. Cite sources.");
    let ledger = ImpactLedger {
        entries: vec![ImpactEntry::new(
            "Cite sources.".to_string(),
            Accuracy::new(5, 10),
            Accuracy::new(7, 10),
            0,
            EvalScope::TrainSet,
        )],
    };

    let render = |messages: Vec<spt_core::backend::ChatMessage>| {
        messages
            .into_iter()
            .map(|m| format!("[{:?}]\n{}\n", m.role, m.content))
            .collect::<String>()
    };

    let cases: Vec<(&str, Vec<spt_core::backend::ChatMessage>)> = vec![
        (
            "p_update_spt_p.txt",
            build_p_update_request(Variant::SptP, &c_i, &p_i, &mistakes, None).unwrap(),
        ),
        (
            "p_update_spt_cot.txt",
            build_p_update_request(Variant::SptCot, &c_i, &p_i, &mistakes, None).unwrap(),
        ),
        (
            "p_update_spt_imp.txt",
            build_p_update_request(Variant::SptImp, &c_i, &p_i, &mistakes, Some(&ledger)).unwrap(),
        ),
        (
            "c_update_spt_pc.txt",
            build_c_update_request(Variant::SptPc, &c_i, &p_i, &p_star, &mistakes, None).unwrap(),
        ),
        (
            "c_update_spt_imp.txt",
            build_c_update_request(Variant::SptImp, &c_i, &p_i, &p_star, &[], Some(&ledger)).unwrap(),
        ),
    ];
    for (name, messages) in cases {
        std::fs::write(dir.join(name), render(messages)).unwrap();
    }
}
