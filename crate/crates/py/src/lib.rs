//! Python bindings: dataset loading and splitting, the text utilities
//! (segmentation, answer extraction, prompt parsing, impact annotation),
//! and a train entry point driven by a JSON config.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use spt_core::backend::extract_choice_index as core_extract;
use spt_core::corrector::parse_new_prompt as core_parse;
use spt_core::impact::annotate_with_impact as core_annotate;
use spt_core::segment::segment_sentences as core_segment;
use spt_core::trainer::{Trainer, TrainerConfig};
use spt_core::types::ImpactLedger;
use spt_core::{datasets, MetaPrompt, SptError};
use std::path::PathBuf;

fn to_py_err(e: SptError) -> PyErr {
    match e {
        SptError::Transport(_) | SptError::Provider { .. } | SptError::MockMiss(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// One multiple-choice question.
#[pyclass(name = "McqItem", from_py_object)]
#[derive(Clone)]
struct PyMcqItem {
    inner: spt_core::McqItem,
}

#[pymethods]
impl PyMcqItem {
    #[new]
    fn new(id: String, question: String, choices: Vec<String>, answer_index: usize) -> PyResult<Self> {
        let inner = spt_core::McqItem::new(id, question, choices, answer_index).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn question(&self) -> &str {
        &self.inner.question
    }

    #[getter]
    fn choices(&self) -> Vec<String> {
        self.inner.choices.clone()
    }

    #[getter]
    fn answer_index(&self) -> usize {
        self.inner.answer_index
    }

    fn __repr__(&self) -> String {
        format!(
            "McqItem(id={:?}, question={:?}, choices={}, answer_index={})",
            self.inner.id,
            self.inner.question,
            self.inner.choices.len(),
            self.inner.answer_index
        )
    }
}

/// Splits text into trimmed sentences on `.`, `!`, `?` boundaries.
#[pyfunction]
fn segment_sentences(text: &str) -> Vec<String> {
    core_segment(text)
}

/// Extracts a zero-based choice index from a model reply, or None.
#[pyfunction]
fn extract_choice_index(reply: &str, n_choices: usize) -> Option<usize> {
    core_extract(reply, n_choices)
}

/// Parses a corrector reply; returns (prompt_text, marker_missing).
#[pyfunction]
fn parse_new_prompt(reply: &str) -> PyResult<(String, bool)> {
    let parsed = core_parse(reply).map_err(to_py_err)?;
    Ok((parsed.text, parsed.marker_missing))
}

/// Annotates a prompt with impact scores from a ledger given as JSON.
#[pyfunction]
fn annotate_with_impact(prompt: &str, ledger_json: &str) -> PyResult<String> {
    let ledger: ImpactLedger =
        serde_json::from_str(ledger_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(core_annotate(&MetaPrompt::initial(prompt), &ledger))
}

/// Loads a JSONL dataset file.
#[pyfunction]
fn load_dataset(path: PathBuf) -> PyResult<Vec<PyMcqItem>> {
    let items = datasets::load(&path).map_err(to_py_err)?;
    Ok(items.into_iter().map(|inner| PyMcqItem { inner }).collect())
}

/// Seeded train/test split; returns the two lists of item ids.
#[pyfunction]
fn split_dataset(
    items: Vec<PyMcqItem>,
    train_fraction: f64,
    seed: u64,
) -> PyResult<(Vec<String>, Vec<String>)> {
    let items: Vec<spt_core::McqItem> = items.into_iter().map(|i| i.inner).collect();
    let (train, test) = datasets::split(&items, train_fraction, seed).map_err(to_py_err)?;
    Ok((
        train.into_iter().map(|i| i.id).collect(),
        test.into_iter().map(|i| i.id).collect(),
    ))
}

/// Runs a full training loop from a JSON-encoded config; returns the final
/// run document as JSON.
#[pyfunction]
fn train(config_json: &str) -> PyResult<String> {
    let config: TrainerConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mut trainer = Trainer::new(config).map_err(to_py_err)?;
    let run = trainer.train().map_err(to_py_err)?;
    serde_json::to_string_pretty(run).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn spt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMcqItem>()?;
    m.add_function(wrap_pyfunction!(segment_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(extract_choice_index, m)?)?;
    m.add_function(wrap_pyfunction!(parse_new_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(annotate_with_impact, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(split_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
