//! Data model shared by every stage of the pipeline.
//!
//! All offsets are token indices and every interval is half-open
//! (`start..stop`). Character offsets are never used.

pub(crate) mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_annotations, read_probabilities, read_raw_reviews, read_reviews, read_sentence_labelings,
    read_token_labelings, write_annotations, write_probabilities, write_reviews,
    write_sentence_labelings, write_token_labeling, write_token_labelings, SentenceDocument,
    TokenDocument,
};

/// Argumentative label of a token or sentence, relative to the implicit
/// claim "the paper should be accepted".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Pro,
    Con,
    Non,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Pro, Label::Con, Label::Non];

    pub fn is_argument(self) -> bool {
        self != Label::Non
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pro => "PRO",
            Label::Con => "CON",
            Label::Non => "NON",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PRO" => Ok(Label::Pro),
            "CON" => Ok(Label::Con),
            "NON" => Ok(Label::Non),
            other => Err(format!(
                "unknown label `{other}` (expected PRO, CON or NON)"
            )),
        }
    }
}

/// The three prediction tasks defined over the annotation.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Argument detection: PRO and CON collapse into ARG.
    Argument,
    /// Stance detection, defined only on argumentative units.
    Stance,
    /// Joint detection over all three labels.
    Joint,
}

impl Task {
    pub fn classes(self) -> &'static [TaskLabel] {
        match self {
            Task::Argument => &[TaskLabel::Arg, TaskLabel::Non],
            Task::Stance => &[TaskLabel::Pro, TaskLabel::Con],
            Task::Joint => &[TaskLabel::Pro, TaskLabel::Con, TaskLabel::Non],
        }
    }

    /// Maps an annotation label into this task's label space. Returns `None`
    /// for NON under the stance task.
    pub fn map(self, label: Label) -> Option<TaskLabel> {
        match (self, label) {
            (Task::Argument, Label::Non) => Some(TaskLabel::Non),
            (Task::Argument, _) => Some(TaskLabel::Arg),
            (Task::Stance, Label::Non) => None,
            (_, label) => Some(label.into()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Argument => "argument",
            Task::Stance => "stance",
            Task::Joint => "joint",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "argument" => Ok(Task::Argument),
            "stance" => Ok(Task::Stance),
            "joint" => Ok(Task::Joint),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

/// A class in some task's label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskLabel {
    Pro,
    Con,
    Non,
    Arg,
}

impl TaskLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskLabel::Pro => "PRO",
            TaskLabel::Con => "CON",
            TaskLabel::Non => "NON",
            TaskLabel::Arg => "ARG",
        }
    }
}

impl From<Label> for TaskLabel {
    fn from(label: Label) -> Self {
        match label {
            Label::Pro => TaskLabel::Pro,
            Label::Con => TaskLabel::Con,
            Label::Non => TaskLabel::Non,
        }
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Granularity at which labels are assigned and scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Token,
    Sentence,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Token => "token",
            Level::Sentence => "sentence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accept" => Ok(Decision::Accept),
            "reject" => Ok(Decision::Reject),
            other => Err(format!(
                "unknown decision `{other}` (expected accept or reject)"
            )),
        }
    }
}

/// Half-open token interval `start..stop`. Serialized as `[start, stop]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TokenSpan {
    pub start: usize,
    pub stop: usize,
}

impl TokenSpan {
    pub fn new(start: usize, stop: usize) -> Self {
        TokenSpan { start, stop }
    }

    pub fn len(&self) -> usize {
        self.stop.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.stop <= self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.stop
    }

    /// True when the two intervals share at least one token.
    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.start < other.stop && other.start < self.stop
    }
}

impl From<[usize; 2]> for TokenSpan {
    fn from([start, stop]: [usize; 2]) -> Self {
        TokenSpan { start, stop }
    }
}

impl From<TokenSpan> for [usize; 2] {
    fn from(span: TokenSpan) -> Self {
        [span.start, span.stop]
    }
}

/// Ids end up in tab-separated files and header lines, so they must be
/// nonempty and free of whitespace.
pub(crate) fn identifier_problem(what: &str, id: &str) -> Option<String> {
    if id.is_empty() {
        Some(format!("{what} must not be empty"))
    } else if id.chars().any(char::is_whitespace) {
        Some(format!("{what} `{id}` must not contain whitespace"))
    } else {
        None
    }
}

/// A tokenized, sentence-segmented review with its metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub paper_id: String,
    pub conference: String,
    pub rating: Option<u8>,
    pub decision: Option<Decision>,
    pub tokens: Vec<String>,
    pub sentence_bounds: Vec<TokenSpan>,
}

impl Review {
    pub fn validate(&self) -> Result<()> {
        match self.violation() {
            Some((_, message)) => Err(Error::Validation(message)),
            None => Ok(()),
        }
    }

    /// First violated invariant, with the name of the offending field.
    pub(crate) fn violation(&self) -> Option<(&'static str, String)> {
        for (field, value) in [
            ("review_id", &self.review_id),
            ("paper_id", &self.paper_id),
            ("conference", &self.conference),
        ] {
            if let Some(message) = identifier_problem(field, value) {
                return Some((field, message));
            }
        }
        if let Some(rating) = self.rating {
            if !(1..=4).contains(&rating) {
                return Some(("rating", format!("rating {rating} outside 1..4")));
            }
        }
        for (i, token) in self.tokens.iter().enumerate() {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Some((
                    "tokens",
                    format!("token {i} is empty or contains whitespace"),
                ));
            }
        }
        check_bounds(&self.review_id, &self.sentence_bounds, self.tokens.len())
            .err()
            .map(|e| ("sentence_bounds", e.to_string()))
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_sentences(&self) -> usize {
        self.sentence_bounds.len()
    }

    pub fn sentence_tokens(&self, index: usize) -> &[String] {
        &self.tokens[self.sentence_bounds[index].range()]
    }

    pub fn sentence_text(&self, index: usize) -> String {
        self.sentence_tokens(index).join(" ")
    }

    pub fn rating_required(&self) -> Result<u8> {
        self.rating.ok_or_else(|| Error::MissingField {
            review_id: self.review_id.clone(),
            field: "rating",
        })
    }

    pub fn decision_required(&self) -> Result<Decision> {
        self.decision.ok_or_else(|| Error::MissingField {
            review_id: self.review_id.clone(),
            field: "decision",
        })
    }
}

/// Sentence bounds must be sorted, disjoint, nonempty and cover `0..n_tokens`.
pub(crate) fn check_bounds(review_id: &str, bounds: &[TokenSpan], n_tokens: usize) -> Result<()> {
    let mut expected_start = 0;
    for (i, span) in bounds.iter().enumerate() {
        if span.is_empty() {
            return Err(Error::Validation(format!(
                "review `{review_id}`: sentence {i} [{}, {}) is empty",
                span.start, span.stop
            )));
        }
        if span.start < expected_start {
            return Err(Error::Validation(format!(
                "review `{review_id}`: sentence {i} [{}, {}) overlaps or precedes the previous sentence",
                span.start, span.stop
            )));
        }
        if span.start > expected_start {
            return Err(Error::Validation(format!(
                "review `{review_id}`: tokens [{expected_start}, {}) are not covered by any sentence",
                span.start
            )));
        }
        expected_start = span.stop;
    }
    if expected_start != n_tokens {
        return Err(Error::Validation(format!(
            "review `{review_id}`: sentence bounds cover {expected_start} of {n_tokens} tokens"
        )));
    }
    Ok(())
}

/// Review text as crawled, before preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReview {
    pub review_id: String,
    pub paper_id: String,
    pub conference: String,
    pub rating: Option<u8>,
    pub decision: Option<Decision>,
    pub text: String,
}

/// One annotator's argumentative segment on one review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub annotator_id: String,
    pub review_id: String,
    pub start: usize,
    pub stop: usize,
    pub label: Label,
}

impl SpanAnnotation {
    pub fn span(&self) -> TokenSpan {
        TokenSpan::new(self.start, self.stop)
    }

    /// Checks the invariants that do not need the review.
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("annotator_id", &self.annotator_id),
            ("review_id", &self.review_id),
        ] {
            if let Some(message) = identifier_problem(field, value) {
                return Err(Error::Validation(message));
            }
        }
        if self.start >= self.stop {
            return Err(Error::Validation(format!(
                "span ({}, {}) of annotator `{}` on review `{}` has start >= stop",
                self.start, self.stop, self.annotator_id, self.review_id
            )));
        }
        if self.label == Label::Non {
            return Err(Error::Validation(format!(
                "span ({}, {}) of annotator `{}` on review `{}` is labeled NON; spans carry PRO or CON",
                self.start, self.stop, self.annotator_id, self.review_id
            )));
        }
        Ok(())
    }
}

/// Rejects overlapping spans of the same annotator on the same review.
pub(crate) fn check_no_overlap(spans: &[SpanAnnotation]) -> Result<()> {
    let mut keyed: Vec<&SpanAnnotation> = spans.iter().collect();
    keyed.sort_by(|a, b| {
        (&a.review_id, &a.annotator_id, a.start).cmp(&(&b.review_id, &b.annotator_id, b.start))
    });
    for pair in keyed.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.review_id == b.review_id && a.annotator_id == b.annotator_id && b.start < a.stop {
            return Err(Error::Validation(format!(
                "annotator `{}` has overlapping spans ({}, {}) and ({}, {}) on review `{}`",
                a.annotator_id, a.start, a.stop, b.start, b.stop, a.review_id
            )));
        }
    }
    Ok(())
}

/// Checks every span against the token count of its review.
pub fn check_spans_against(reviews: &[Review], spans: &[SpanAnnotation]) -> Result<()> {
    let lengths: std::collections::HashMap<&str, usize> = reviews
        .iter()
        .map(|r| (r.review_id.as_str(), r.n_tokens()))
        .collect();
    for span in spans {
        let n = *lengths.get(span.review_id.as_str()).ok_or_else(|| {
            Error::Validation(format!(
                "span of annotator `{}` refers to unknown review `{}`",
                span.annotator_id, span.review_id
            ))
        })?;
        if span.stop > n {
            return Err(Error::Validation(format!(
                "span ({}, {}) of annotator `{}` exceeds the {n} tokens of review `{}`",
                span.start, span.stop, span.annotator_id, span.review_id
            )));
        }
    }
    Ok(())
}

/// Who produced a labeling.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    Gold,
    Predicted,
    Annotator(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Gold => f.write_str("gold"),
            Provenance::Predicted => f.write_str("predicted"),
            Provenance::Annotator(id) => write!(f, "annotator:{id}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(Provenance::Gold),
            "predicted" => Ok(Provenance::Predicted),
            _ => match s.strip_prefix("annotator:") {
                Some(id) if !id.is_empty() && !id.chars().any(char::is_whitespace) => {
                    Ok(Provenance::Annotator(id.to_string()))
                }
                _ => Err(format!("unknown provenance `{s}`")),
            },
        }
    }
}

/// One label per token of a review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLabeling {
    pub review_id: String,
    pub labels: Vec<Label>,
    pub provenance: Provenance,
}

impl TokenLabeling {
    pub fn check_against(&self, review: &Review) -> Result<()> {
        if self.labels.len() != review.n_tokens() {
            return Err(Error::LengthMismatch {
                what: format!("token labeling of review `{}`", review.review_id),
                expected: review.n_tokens(),
                found: self.labels.len(),
            });
        }
        Ok(())
    }
}

/// One label per sentence of a review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceLabeling {
    pub review_id: String,
    pub labels: Vec<Label>,
    pub provenance: Provenance,
}

impl SentenceLabeling {
    pub fn check_against(&self, review: &Review) -> Result<()> {
        if self.labels.len() != review.n_sentences() {
            return Err(Error::LengthMismatch {
                what: format!("sentence labeling of review `{}`", review.review_id),
                expected: review.n_sentences(),
                found: self.labels.len(),
            });
        }
        Ok(())
    }
}

/// Predicted probability that a sentence is argumentative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRecord {
    pub review_id: String,
    pub sentence_index: usize,
    pub p_arg: f64,
}

impl ProbabilityRecord {
    pub fn validate(&self) -> Result<()> {
        if let Some(message) = identifier_problem("review_id", &self.review_id) {
            return Err(Error::Validation(message));
        }
        if !(0.0..=1.0).contains(&self.p_arg) {
            return Err(Error::Validation(format!(
                "p_arg {} for sentence {} of review `{}` is outside [0, 1]",
                self.p_arg, self.sentence_index, self.review_id
            )));
        }
        Ok(())
    }
}

/// Checks every probability record's sentence index against its review.
pub fn check_probabilities_against(
    reviews: &[Review],
    records: &[ProbabilityRecord],
) -> Result<()> {
    let counts: std::collections::HashMap<&str, usize> = reviews
        .iter()
        .map(|r| (r.review_id.as_str(), r.n_sentences()))
        .collect();
    for rec in records {
        match counts.get(rec.review_id.as_str()) {
            None => {
                return Err(Error::Validation(format!(
                    "probability refers to unknown review `{}`",
                    rec.review_id
                )))
            }
            Some(&n) if rec.sentence_index >= n => {
                return Err(Error::Validation(format!(
                    "sentence_index {} out of range for review `{}` with {n} sentences",
                    rec.sentence_index, rec.review_id
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}
