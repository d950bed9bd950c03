//! Selective-prediction evaluation for question-answering models.
//!
//! The crate turns per-question evidence (answer log-probabilities, sampled
//! completions with their entailment structure, hidden states, correctness
//! labels) into risk scores, calibrates abstention thresholds to a target
//! hallucination rate, and measures how well those policies behave:
//!
//! - [`data`]: JSONL record schema, validation, stratified train/calibration/test splits
//! - [`entropy`]: sequence NLL, entailment clustering, semantic entropy
//! - [`probes`]: standardized L2 logistic probes on hidden states, CV layer selection
//! - [`combiner`]: two-feature fusion of an entropy risk with the correctness-probe risk
//! - [`policy`]: answer/abstain thresholds calibrated to a target risk
//! - [`metrics`]: AUROC, AUPRC, risk-coverage curves, E-AURC, TCE, Spearman, bootstrap
//! - [`synth`]: seeded synthetic record sets with a planted "confidently wrong" regime
//! - [`report`]: CSV/Markdown tables and SVG plots
//! - [`pipeline`]: the end-to-end evaluation used by the `selrisk` binary

pub mod combiner;
pub mod config;
pub mod data;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod policy;
pub mod probes;
pub mod report;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
