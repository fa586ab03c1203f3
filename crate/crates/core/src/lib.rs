//! Supervisory prompt training: a dual-LLM loop in which a generator answers
//! multiple-choice questions under a trainable meta-prompt and a corrector
//! rewrites that meta-prompt (and, in some variants, its own) from the
//! generator's observed mistakes.

pub mod accuracy;
pub mod backend;
pub mod corrector;
pub mod datasets;
pub mod error;
pub mod generator;
pub mod impact;
pub mod segment;
pub mod trainer;
pub mod types;

pub use accuracy::{Accuracy, Rational};
pub use error::{Result, SptError};
pub use types::{EvalResult, ImpactEntry, ImpactLedger, McqItem, MetaPrompt, Mistake, TrainRun};
