//! Shared helpers for scripting deterministic training scenarios.
//! Each test binary uses a different subset of these.
#![allow(dead_code)]

use spt_core::backend::MockScript;
use spt_core::types::{McqItem, Mistake};
use std::path::{Path, PathBuf};

pub fn synthetic_items(n: usize) -> Vec<McqItem> {
    (0..n)
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

pub fn wrong_answer(item: &McqItem) -> i64 {
    ((item.answer_index + 1) % item.choices.len()) as i64
}

/// Scripts `prompt` answering each item: correct when `fixed` contains the
/// id, otherwise a designated wrong choice.
pub fn script_answers(script: &mut MockScript, prompt: &str, items: &[McqItem], fixed: &[&str]) {
    for item in items {
        let answer = if fixed.contains(&item.id.as_str()) {
            item.answer_index as i64
        } else {
            wrong_answer(item)
        };
        script.add_answer(prompt, &item.id, answer);
    }
}

pub fn mistakes_of(items: &[McqItem], fixed: &[&str]) -> Vec<Mistake> {
    items
        .iter()
        .filter(|i| !fixed.contains(&i.id.as_str()))
        .map(|i| Mistake::new(i.clone(), wrong_answer(i)).unwrap())
        .collect()
}

pub fn write_dataset(dir: &Path, items: &[McqItem]) -> PathBuf {
    let path = dir.join("dataset.jsonl");
    let body: String = items
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

pub fn write_script(dir: &Path, name: &str, script: &MockScript) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(script).unwrap()).unwrap();
    path
}

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens").join(name)
}
