//! Corpus engineering and evaluation for argument mining in peer reviews.
//!
//! The crate covers the data path around an argument-mining model:
//!
//! * [`preprocess`]: placeholder normalization, sentence splitting, filtering.
//! * [`annotate`]: multi-annotator span merging and token-to-sentence projection.
//! * [`agreement`]: unitized Krippendorff alphas and human-performance scores.
//! * [`datasetops`]: stratified sampling and splitting, task mapping, class weights.
//! * [`evaluate`]: per-class and macro F1, baselines, seed aggregation, Welch's t-test.
//! * [`select`]: Top-K / Random-K / Full condensation of reviews.
//!
//! [`cli`] wires everything into the `revarg` command.

pub mod agreement;
pub mod annotate;
pub mod cli;
pub mod corpus;
pub mod datasetops;
pub mod error;
pub mod evaluate;
pub mod preprocess;
pub mod select;
pub mod stats;

pub use corpus::{
    Decision, Label, Level, ProbabilityRecord, Provenance, RawReview, Review, SentenceLabeling,
    SpanAnnotation, Task, TaskLabel, TokenLabeling, TokenSpan,
};
pub use error::{Error, Result};
