//! JSONL dataset loading, validation, and seeded train/test splitting.
//!
//! One JSON object per line: `{"id", "question", "choices", "answer_index"}`.
//! Adapters that convert public benchmark releases into this format are
//! documented in the README; no benchmark data ships with the engine.

use crate::error::{Result, SptError};
use crate::types::McqItem;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::Path;

pub fn load(path: &Path) -> Result<Vec<McqItem>> {
    let data = std::fs::read_to_string(path)?;
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: McqItem = serde_json::from_str(line).map_err(|e| SptError::DatasetParse {
            line: line_no + 1,
            message: e.to_string(),
        })?;
        item.validate()?;
        if !seen.insert(item.id.clone()) {
            return Err(SptError::DuplicateId(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

/// Seeded shuffle followed by a prefix split. `|train|` is
/// `round(train_fraction * |items|)`, clamped so both sides are non-empty.
pub fn split(items: &[McqItem], train_fraction: f64, seed: u64) -> Result<(Vec<McqItem>, Vec<McqItem>)> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction <= 0.0 {
        return Err(SptError::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if items.len() < 2 {
        return Err(SptError::TooFewItems(items.len()));
    }
    let mut shuffled: Vec<McqItem> = items.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let n = shuffled.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}
