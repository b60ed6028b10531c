//! Correlation-based detection of slowly emerging topics in time-sliced text.
//!
//! Words belonging to a topic that grows slowly across time slices tend to
//! stabilise in an incrementally rebuilt embedding space while their
//! frequency rises. The detector monitors the windowed Spearman correlation
//! between each word's frequency series and its embedding movement series and
//! flags words whose correlation falls below a threshold.
//!
//! The crate also carries the evaluation harness: controlled re-injection of a
//! held-out category along a logistic schedule, a Naive Bayes gold standard,
//! a TF-IDF threshold baseline and P/R/F + ROC/AUC scoring.

pub mod baselines;
pub mod corpus;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod gold;
pub mod injection;
pub mod synth;

pub use corpus::{Document, TimeSlicedCorpus, VocabMap};
pub use detector::{Alert, AlertMode, ThresholdMode, TrajectorySeries};
pub use embedding::{EmbeddingSnapshot, ModelTag};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, ExperimentConfig};
pub use gold::{GoldStandard, NbModel};
pub use injection::{InjectionPlan, LogisticSchedule};
