//! Turning span annotations into gold labels.
//!
//! Three annotators label each review token-wise. Their labelings are merged
//! by majority vote per token; tokens where all three disagree go to an
//! adjudicator. Sentence labels are then projected from the token labels
//! by counting overlapping argumentative segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::corpus::{Label, Provenance, Review, SentenceLabeling, SpanAnnotation, TokenLabeling};
use crate::error::{Error, Result};

/// Maximal run of tokens sharing one argumentative label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub stop: usize,
    pub label: Label,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.stop - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.stop == self.start
    }

    pub fn overlaps(&self, start: usize, stop: usize) -> bool {
        self.start < stop && start < self.stop
    }
}

/// Token labels for one annotator: span tokens carry the span label,
/// everything else is NON.
pub fn spans_to_token_labels(spans: &[SpanAnnotation], n_tokens: usize) -> Result<Vec<Label>> {
    let mut labels = vec![Label::Non; n_tokens];
    let mut covered = vec![false; n_tokens];
    for span in spans {
        span.validate()?;
        if span.stop > n_tokens {
            return Err(Error::Validation(format!(
                "span ({}, {}) of annotator `{}` exceeds {n_tokens} tokens",
                span.start, span.stop, span.annotator_id
            )));
        }
        for i in span.start..span.stop {
            if covered[i] {
                return Err(Error::Validation(format!(
                    "span ({}, {}) of annotator `{}` overlaps another span at token {i}",
                    span.start, span.stop, span.annotator_id
                )));
            }
            covered[i] = true;
            labels[i] = span.label;
        }
    }
    Ok(labels)
}

/// [`spans_to_token_labels`] wrapped as a labeling of `review` by `annotator_id`.
pub fn annotator_labeling(
    review: &Review,
    annotator_id: &str,
    spans: &[SpanAnnotation],
) -> Result<TokenLabeling> {
    if let Some(span) = spans
        .iter()
        .find(|s| s.review_id != review.review_id || s.annotator_id != annotator_id)
    {
        return Err(Error::Validation(format!(
            "span of `{}` on `{}` passed as annotation of `{annotator_id}` on `{}`",
            span.annotator_id, span.review_id, review.review_id
        )));
    }
    Ok(TokenLabeling {
        review_id: review.review_id.clone(),
        labels: spans_to_token_labels(spans, review.n_tokens())?,
        provenance: Provenance::Annotator(annotator_id.to_string()),
    })
}

/// Maximal same-label runs of PRO/CON tokens, sorted by start.
pub fn extract_segments(labels: &[Label]) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        if !label.is_argument() {
            continue;
        }
        match segments.last_mut() {
            Some(seg) if seg.stop == i && seg.label == label => seg.stop = i + 1,
            _ => segments.push(Segment {
                start: i,
                stop: i + 1,
                label,
            }),
        }
    }
    segments
}

/// Gold labeling plus the token indices still waiting for adjudication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeResult {
    pub gold: TokenLabeling,
    /// Tokens where all three annotators disagreed and no adjudication was
    /// available. They carry NON provisionally.
    pub conflicts: Vec<usize>,
}

impl MergeResult {
    pub fn is_complete(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// Majority label of three votes, `None` when all three differ.
pub fn majority_vote(votes: [Label; 3]) -> Option<Label> {
    let [a, b, c] = votes;
    if a == b || a == c {
        Some(a)
    } else if b == c {
        Some(b)
    } else {
        None
    }
}

/// Merges exactly three annotator labelings by per-token majority vote.
pub fn merge_majority(
    labelings: &[TokenLabeling],
    adjudication: Option<&TokenLabeling>,
) -> Result<MergeResult> {
    let [first, second, third] = labelings else {
        return Err(Error::InvalidArgument(format!(
            "majority merge needs exactly 3 labelings, got {}",
            labelings.len()
        )));
    };
    let n = first.labels.len();
    for other in [second, third].into_iter().chain(adjudication) {
        if other.review_id != first.review_id {
            return Err(Error::Validation(format!(
                "cannot merge labelings of reviews `{}` and `{}`",
                first.review_id, other.review_id
            )));
        }
        if other.labels.len() != n {
            return Err(Error::LengthMismatch {
                what: format!(
                    "labeling of review `{}` ({})",
                    other.review_id, other.provenance
                ),
                expected: n,
                found: other.labels.len(),
            });
        }
    }

    let mut labels = Vec::with_capacity(n);
    let mut conflicts = Vec::new();
    for i in 0..n {
        let votes = [first.labels[i], second.labels[i], third.labels[i]];
        let label = match (majority_vote(votes), adjudication) {
            (Some(label), _) => label,
            (None, Some(adj)) => adj.labels[i],
            (None, None) => {
                conflicts.push(i);
                Label::Non
            }
        };
        labels.push(label);
    }
    Ok(MergeResult {
        gold: TokenLabeling {
            review_id: first.review_id.clone(),
            labels,
            provenance: Provenance::Gold,
        },
        conflicts,
    })
}

/// Label of one sentence given the review's token labels and segments.
fn sentence_label(labels: &[Label], segments: &[Segment], start: usize, stop: usize) -> Label {
    let overlapping: Vec<&Segment> = segments
        .iter()
        .filter(|s| s.overlaps(start, stop))
        .collect();
    if overlapping.is_empty() {
        return Label::Non;
    }
    let count = |label: Label| overlapping.iter().filter(|s| s.label == label).count();
    let (pro_segments, con_segments) = (count(Label::Pro), count(Label::Con));
    if pro_segments != con_segments {
        return if pro_segments > con_segments {
            Label::Pro
        } else {
            Label::Con
        };
    }
    let tokens = &labels[start..stop];
    let pro_tokens = tokens.iter().filter(|&&l| l == Label::Pro).count();
    let con_tokens = tokens.iter().filter(|&&l| l == Label::Con).count();
    match pro_tokens.cmp(&con_tokens) {
        std::cmp::Ordering::Greater => Label::Pro,
        std::cmp::Ordering::Less => Label::Con,
        // segments are sorted by start
        std::cmp::Ordering::Equal => overlapping[0].label,
    }
}

/// Sentence labels from token labels.
///
/// A sentence without argumentative tokens is NON. Otherwise the label of
/// the majority of overlapping segments wins; equal segment counts fall
/// back to the majority of PRO/CON tokens inside the sentence, and equal
/// token counts to the label of the earliest overlapping segment. A segment
/// crossing a sentence boundary counts for every sentence it overlaps.
pub fn project_to_sentences(labeling: &TokenLabeling, review: &Review) -> Result<SentenceLabeling> {
    labeling.check_against(review)?;
    let segments = extract_segments(&labeling.labels);
    let labels = review
        .sentence_bounds
        .iter()
        .map(|b| sentence_label(&labeling.labels, &segments, b.start, b.stop))
        .collect();
    Ok(SentenceLabeling {
        review_id: labeling.review_id.clone(),
        labels,
        provenance: labeling.provenance.clone(),
    })
}

/// Which annotators labeled which review.
///
/// An annotator who marked nothing in a review leaves no span behind, so
/// assignments can be given explicitly; otherwise they are inferred from
/// the spans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignments {
    by_review: BTreeMap<String, BTreeSet<String>>,
}

impl Assignments {
    pub fn infer(spans: &[SpanAnnotation]) -> Self {
        let mut a = Assignments::default();
        for span in spans {
            a.add(&span.review_id, &span.annotator_id);
        }
        a
    }

    /// Parses `review_id<TAB>annotator_id` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut a = Assignments::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (review, annotator) = line.split_once('\t').ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "assignment line {}: expected `review_id<TAB>annotator_id`",
                    i + 1
                ))
            })?;
            a.add(review.trim(), annotator.trim());
        }
        Ok(a)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn add(&mut self, review_id: &str, annotator_id: &str) {
        self.by_review
            .entry(review_id.to_string())
            .or_default()
            .insert(annotator_id.to_string());
    }

    /// Annotators of a review, sorted by id.
    pub fn annotators(&self, review_id: &str) -> Vec<&str> {
        self.by_review
            .get(review_id)
            .map(|s| s.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Every span must come from an assigned annotator.
    pub fn check_covers(&self, spans: &[SpanAnnotation]) -> Result<()> {
        for span in spans {
            if !self
                .by_review
                .get(&span.review_id)
                .is_some_and(|s| s.contains(&span.annotator_id))
            {
                return Err(Error::Validation(format!(
                    "annotator `{}` has spans on review `{}` but is not assigned to it",
                    span.annotator_id, span.review_id
                )));
            }
        }
        Ok(())
    }
}

/// Groups spans by review id, then annotator id.
pub fn group_spans(
    spans: &[SpanAnnotation],
) -> BTreeMap<&str, BTreeMap<&str, Vec<SpanAnnotation>>> {
    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<SpanAnnotation>>> = BTreeMap::new();
    for span in spans {
        grouped
            .entry(span.review_id.as_str())
            .or_default()
            .entry(span.annotator_id.as_str())
            .or_default()
            .push(span.clone());
    }
    grouped
}

/// Token labelings of every assigned annotator of `review`, in annotator
/// id order.
pub fn annotator_labelings(
    review: &Review,
    assignments: &Assignments,
    spans: &[SpanAnnotation],
) -> Result<Vec<TokenLabeling>> {
    assignments
        .annotators(&review.review_id)
        .into_iter()
        .map(|annotator| {
            let own: Vec<SpanAnnotation> = spans
                .iter()
                .filter(|s| s.review_id == review.review_id && s.annotator_id == annotator)
                .cloned()
                .collect();
            annotator_labeling(review, annotator, &own)
        })
        .collect()
}

/// Merges the three annotations of every assigned review.
///
/// `adjudication` spans are used for a review only if the review has at
/// least one adjudication span. Reviews without assignments are skipped.
pub fn merge_reviews(
    reviews: &[Review],
    assignments: &Assignments,
    spans: &[SpanAnnotation],
    adjudication: &[SpanAnnotation],
) -> Result<Vec<MergeResult>> {
    crate::corpus::check_spans_against(reviews, spans)?;
    crate::corpus::check_spans_against(reviews, adjudication)?;
    assignments.check_covers(spans)?;
    let by_review_spans = group_spans(spans);
    let adjudication_by_review = group_spans(adjudication);

    let mut results = Vec::new();
    for review in reviews {
        let annotators = assignments.annotators(&review.review_id);
        if annotators.is_empty() {
            continue;
        }
        if annotators.len() != 3 {
            return Err(Error::Validation(format!(
                "review `{}` has {} annotators ({}), majority merge needs 3",
                review.review_id,
                annotators.len(),
                annotators.join(", ")
            )));
        }
        let empty = BTreeMap::new();
        let own = by_review_spans
            .get(review.review_id.as_str())
            .unwrap_or(&empty);
        let labelings = annotators
            .iter()
            .map(|a| annotator_labeling(review, a, own.get(a).map(Vec::as_slice).unwrap_or(&[])))
            .collect::<Result<Vec<_>>>()?;

        let adj = match adjudication_by_review.get(review.review_id.as_str()) {
            None => None,
            Some(by_annotator) => {
                if by_annotator.len() != 1 {
                    return Err(Error::Validation(format!(
                        "review `{}` has {} adjudicators, expected one",
                        review.review_id,
                        by_annotator.len()
                    )));
                }
                let (adjudicator, adj_spans) = by_annotator.iter().next().unwrap();
                if annotators.contains(adjudicator) {
                    return Err(Error::Validation(format!(
                        "adjudicator `{adjudicator}` already annotated review `{}`",
                        review.review_id
                    )));
                }
                Some(annotator_labeling(review, adjudicator, adj_spans)?)
            }
        };
        results.push(merge_majority(&labelings, adj.as_ref())?);
    }
    Ok(results)
}
