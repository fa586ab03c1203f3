//! Deterministic scripted backend for tests and fixtures.
//!
//! A script maps request fingerprints to canned completions and
//! (prompt fingerprint, item id) pairs to answer indices. A completion entry
//! may be a list, consumed in call order per fingerprint; the last element
//! repeats once exhausted, which is how one script serves `n` identical
//! candidate requests with distinct responses.

use super::{messages_fingerprint, prompt_fingerprint, ChatMessage};
use crate::error::{Result, SptError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum MockCompletion {
    One(String),
    Sequence(Vec<String>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct MockScript {
    /// prompt fingerprint -> item id -> 0-based answer index (-1 = unparseable).
    pub answers: HashMap<String, HashMap<String, i64>>,
    /// request fingerprint -> completion text(s).
    pub completions: HashMap<String, MockCompletion>,
    /// Fallback completion for unknown fingerprints; a miss is an error
    /// when unset.
    pub default_completion: Option<String>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&data)?)
    }

    pub fn add_completion(&mut self, messages: &[ChatMessage], responses: Vec<String>) {
        let completion = if responses.len() == 1 {
            MockCompletion::One(responses.into_iter().next().unwrap())
        } else {
            MockCompletion::Sequence(responses)
        };
        self.completions.insert(messages_fingerprint(messages), completion);
    }

    pub fn add_answer(&mut self, prompt_text: &str, item_id: &str, index: i64) {
        self.answers
            .entry(prompt_fingerprint(prompt_text))
            .or_default()
            .insert(item_id.to_string(), index);
    }
}

pub struct MockBackend {
    script: MockScript,
    call_counts: Mutex<HashMap<String, usize>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self { script, call_counts: Mutex::new(HashMap::new()) }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::new(MockScript::load(path)?))
    }

    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let fingerprint = messages_fingerprint(messages);
        match self.script.completions.get(&fingerprint) {
            Some(MockCompletion::One(text)) => Ok(text.clone()),
            Some(MockCompletion::Sequence(texts)) => {
                let mut counts = self.call_counts.lock().unwrap();
                let count = counts.entry(fingerprint).or_insert(0);
                let text = texts[(*count).min(texts.len() - 1)].clone();
                *count += 1;
                Ok(text)
            }
            None => match &self.script.default_completion {
                Some(text) => Ok(text.clone()),
                None => Err(SptError::MockMiss(fingerprint)),
            },
        }
    }

    pub fn lookup_answer(&self, prompt_text: &str, item_id: &str) -> Option<i64> {
        self.script
            .answers
            .get(&prompt_fingerprint(prompt_text))
            .and_then(|by_item| by_item.get(item_id))
            .copied()
    }
}
