//! Inter-annotator agreement: nominal Krippendorff alpha over token units
//! and over overlapping segment pairs, plus human performance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    check_spans_against, Label, Level, Provenance, Review, SentenceLabeling, SpanAnnotation, Task,
    TaskLabel, TokenLabeling,
};
use crate::error::{Error, Result};
use crate::evaluate::{report_from_confusion, ConfusionMatrix};
use crate::stats;

/// Nominal coincidence matrix. Accumulation is additive, so partial
/// matrices built on disjoint unit sets can be merged.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMatrix<L: Ord> {
    cells: BTreeMap<(L, L), f64>,
    pairable_units: usize,
}

impl<L: Ord> Default for CoincidenceMatrix<L> {
    fn default() -> Self {
        CoincidenceMatrix {
            cells: BTreeMap::new(),
            pairable_units: 0,
        }
    }
}

impl<L: Ord + Clone> CoincidenceMatrix<L> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one unit. Units with fewer than two labels are not pairable and
    /// are ignored.
    pub fn add_unit(&mut self, labels: &[L]) {
        let m = labels.len();
        if m < 2 {
            return;
        }
        let weight = 1.0 / (m - 1) as f64;
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                if i != j {
                    *self.cells.entry((a.clone(), b.clone())).or_insert(0.0) += weight;
                }
            }
        }
        self.pairable_units += 1;
    }

    /// Adds a unit of exactly two labels without allocating.
    pub fn add_pair(&mut self, a: L, b: L) {
        *self.cells.entry((a.clone(), b.clone())).or_insert(0.0) += 1.0;
        *self.cells.entry((b, a)).or_insert(0.0) += 1.0;
        self.pairable_units += 1;
    }

    pub fn merge(&mut self, other: &CoincidenceMatrix<L>) {
        for (k, v) in &other.cells {
            *self.cells.entry(k.clone()).or_insert(0.0) += v;
        }
        self.pairable_units += other.pairable_units;
    }

    pub fn get(&self, c: &L, k: &L) -> f64 {
        self.cells
            .get(&(c.clone(), k.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn pairable_units(&self) -> usize {
        self.pairable_units
    }

    /// Total number of pairable values.
    pub fn n(&self) -> f64 {
        self.cells.values().sum()
    }

    pub fn marginals(&self) -> BTreeMap<L, f64> {
        let mut n_c = BTreeMap::new();
        for ((c, _), v) in &self.cells {
            *n_c.entry(c.clone()).or_insert(0.0) += v;
        }
        n_c
    }

    /// `1 - D_o / D_e`.
    pub fn alpha(&self) -> Result<f64> {
        if self.pairable_units == 0 {
            return Err(Error::UndefinedAlpha(
                "no unit carries two or more labels".into(),
            ));
        }
        let n = self.n();
        let observed: f64 = self
            .cells
            .iter()
            .filter(|((c, k), _)| c != k)
            .map(|(_, v)| v)
            .sum::<f64>()
            / n;
        let marginals: Vec<f64> = self.marginals().into_values().collect();
        let total_sq: f64 = marginals.iter().sum::<f64>().powi(2);
        let diag_sq: f64 = marginals.iter().map(|v| v * v).sum();
        let expected = (total_sq - diag_sq) / (n * (n - 1.0));
        if marginals.len() < 2 || expected <= 0.0 {
            return Err(Error::DegenerateAlpha);
        }
        if observed == 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 - observed / expected)
    }
}

/// Nominal alpha over `(unit, annotator, label)` triples.
///
/// A unit may receive at most one label per annotator.
pub fn nominal_alpha<U, A, L>(units: &[(U, A, L)]) -> Result<f64>
where
    U: Ord,
    A: Ord,
    L: Ord + Clone,
{
    let mut by_unit: BTreeMap<&U, BTreeMap<&A, &L>> = BTreeMap::new();
    for (u, a, l) in units {
        if by_unit.entry(u).or_default().insert(a, l).is_some() {
            return Err(Error::Validation(
                "an annotator labeled the same unit twice".into(),
            ));
        }
    }
    let mut matrix = CoincidenceMatrix::new();
    for labels in by_unit.values() {
        let labels: Vec<L> = labels.values().map(|&l| l.clone()).collect();
        matrix.add_unit(&labels);
    }
    matrix.alpha()
}

fn annotator_of(labeling: &TokenLabeling) -> Result<&str> {
    match &labeling.provenance {
        Provenance::Annotator(id) => Ok(id),
        other => Err(Error::Validation(format!(
            "labeling of review `{}` has provenance {other}, expected an annotator",
            labeling.review_id
        ))),
    }
}

/// Token-unit coincidence matrix: one unit per token position, NON
/// included.
pub fn token_coincidences(
    reviews: &[Review],
    labelings: &[TokenLabeling],
) -> Result<CoincidenceMatrix<Label>> {
    let by_id: BTreeMap<&str, &Review> =
        reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
    let mut grouped: BTreeMap<&str, BTreeMap<&str, &TokenLabeling>> = BTreeMap::new();
    for labeling in labelings {
        let review = by_id.get(labeling.review_id.as_str()).ok_or_else(|| {
            Error::Validation(format!(
                "labeling for unknown review `{}`",
                labeling.review_id
            ))
        })?;
        labeling.check_against(review)?;
        let annotator = annotator_of(labeling)?;
        if grouped
            .entry(&labeling.review_id)
            .or_default()
            .insert(annotator, labeling)
            .is_some()
        {
            return Err(Error::Validation(format!(
                "annotator `{annotator}` has two labelings of review `{}`",
                labeling.review_id
            )));
        }
    }

    let mut matrix = CoincidenceMatrix::new();
    let mut column = Vec::new();
    for (review_id, by_annotator) in grouped {
        for pos in 0..by_id[review_id].n_tokens() {
            column.clear();
            column.extend(by_annotator.values().map(|l| l.labels[pos]));
            matrix.add_unit(&column);
        }
    }
    Ok(matrix)
}

/// Alpha over token positions, so overlap length weighs in token by token.
pub fn u_alpha(reviews: &[Review], labelings: &[TokenLabeling]) -> Result<f64> {
    token_coincidences(reviews, labelings)?.alpha()
}

/// Segment-pair coincidence matrix: one unit per unordered pair of
/// overlapping segments from different annotators of the same review.
pub fn segment_pair_coincidences(
    reviews: &[Review],
    spans: &[SpanAnnotation],
) -> Result<CoincidenceMatrix<Label>> {
    check_spans_against(reviews, spans)?;
    let mut by_review: BTreeMap<&str, Vec<&SpanAnnotation>> = BTreeMap::new();
    for s in spans {
        by_review.entry(&s.review_id).or_default().push(s);
    }
    let mut matrix = CoincidenceMatrix::new();
    for segments in by_review.values() {
        for (i, a) in segments.iter().enumerate() {
            for b in &segments[i + 1..] {
                if a.annotator_id != b.annotator_id && a.span().overlaps(&b.span()) {
                    matrix.add_pair(a.label, b.label);
                }
            }
        }
    }
    Ok(matrix)
}

/// Alpha over the labels of overlapping segment pairs, ignoring overlap
/// length.
pub fn cu_alpha(reviews: &[Review], spans: &[SpanAnnotation]) -> Result<f64> {
    let matrix = segment_pair_coincidences(reviews, spans)?;
    if matrix.pairable_units() == 0 {
        return Err(Error::UndefinedAlpha(
            "no segments of different annotators overlap".into(),
        ));
    }
    matrix.alpha()
}

/// Read access shared by token and sentence labelings.
pub trait Labeling {
    fn review_id(&self) -> &str;
    fn labels(&self) -> &[Label];
    fn provenance(&self) -> &Provenance;
}

impl Labeling for TokenLabeling {
    fn review_id(&self) -> &str {
        &self.review_id
    }
    fn labels(&self) -> &[Label] {
        &self.labels
    }
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

impl Labeling for SentenceLabeling {
    fn review_id(&self) -> &str {
        &self.review_id
    }
    fn labels(&self) -> &[Label] {
        &self.labels
    }
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanPerformance {
    pub task: Task,
    pub level: Level,
    pub per_annotator: BTreeMap<String, f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 when only one annotator is scored.
    pub std: f64,
    pub single_annotator: bool,
    pub warnings: Vec<String>,
}

/// Macro-F1 of every annotator against gold over the reviews they
/// annotated.
///
/// Under the stance task only units gold-labeled PRO or CON are scored; an
/// annotator's NON on such a unit counts as a miss. Annotators with no
/// scorable unit are excluded with a warning.
pub fn human_performance<G: Labeling, A: Labeling>(
    gold: &[G],
    annotators: &[A],
    task: Task,
    level: Level,
) -> Result<HumanPerformance> {
    let gold_by_id: BTreeMap<&str, &G> = gold.iter().map(|g| (g.review_id(), g)).collect();
    let mut confusions: BTreeMap<String, ConfusionMatrix> = BTreeMap::new();
    let mut warnings = Vec::new();

    for labeling in annotators {
        let id = match labeling.provenance() {
            Provenance::Annotator(id) => id.clone(),
            other => {
                return Err(Error::Validation(format!(
                    "labeling of review `{}` has provenance {other}, expected an annotator",
                    labeling.review_id()
                )))
            }
        };
        let confusion = confusions.entry(id.clone()).or_default();
        let Some(g) = gold_by_id.get(labeling.review_id()) else {
            warnings.push(format!(
                "annotator `{id}`: review `{}` has no gold labeling, skipped",
                labeling.review_id()
            ));
            continue;
        };
        if g.labels().len() != labeling.labels().len() {
            return Err(Error::LengthMismatch {
                what: format!(
                    "annotator `{id}` labeling of review `{}`",
                    labeling.review_id()
                ),
                expected: g.labels().len(),
                found: labeling.labels().len(),
            });
        }
        for (&gl, &al) in g.labels().iter().zip(labeling.labels()) {
            let Some(gold_class) = task.map(gl) else {
                continue;
            };
            let pred = task.map(al).unwrap_or(TaskLabel::Non);
            confusion.add(gold_class, pred);
        }
    }

    let mut per_annotator = BTreeMap::new();
    for (id, confusion) in confusions {
        if confusion.total() == 0 {
            warnings.push(format!("annotator `{id}` has no scorable unit, excluded"));
            continue;
        }
        let report = report_from_confusion(confusion, task, level);
        per_annotator.insert(id, report.macro_f1);
    }
    if per_annotator.is_empty() {
        return Err(Error::Validation(
            "no annotator could be scored against gold".into(),
        ));
    }
    let scores: Vec<f64> = per_annotator.values().copied().collect();
    let single_annotator = scores.len() == 1;
    if single_annotator {
        warnings.push("only one annotator scored, std reported as 0".into());
    }
    Ok(HumanPerformance {
        task,
        level,
        mean: stats::mean(&scores),
        std: if single_annotator {
            0.0
        } else {
            stats::sample_std(&scores)
        },
        per_annotator,
        single_annotator,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub u_alpha: f64,
    pub cu_alpha: f64,
    /// Token positions labeled by at least two annotators.
    pub n_pairable_units: usize,
    /// Overlapping cross-annotator segment pairs.
    pub n_segment_pairs: usize,
    pub level: Level,
    /// Annotator id to task to macro-F1.
    pub per_annotator_f1: BTreeMap<String, BTreeMap<Task, f64>>,
    pub hp_mean: BTreeMap<Task, f64>,
    pub hp_std: BTreeMap<Task, f64>,
    pub warnings: Vec<String>,
}

/// Both alphas plus human performance on every task.
///
/// `labelings` are the annotators' token labelings and `spans` the spans
/// they were built from. Human performance is scored at `level`, against
/// `gold_tokens` or `gold_sentences` respectively.
pub fn agreement_report(
    reviews: &[Review],
    spans: &[SpanAnnotation],
    labelings: &[TokenLabeling],
    gold_tokens: &[TokenLabeling],
    gold_sentences: &[SentenceLabeling],
    level: Level,
) -> Result<AgreementReport> {
    let tokens = token_coincidences(reviews, labelings)?;
    let segments = segment_pair_coincidences(reviews, spans)?;
    let u = tokens.alpha()?;
    let cu = cu_alpha(reviews, spans)?;

    let annotator_sentences = match level {
        Level::Token => Vec::new(),
        Level::Sentence => {
            let by_id: BTreeMap<&str, &Review> =
                reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
            labelings
                .iter()
                .map(|l| crate::annotate::project_to_sentences(l, by_id[l.review_id.as_str()]))
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut per_annotator_f1: BTreeMap<String, BTreeMap<Task, f64>> = BTreeMap::new();
    let mut hp_mean = BTreeMap::new();
    let mut hp_std = BTreeMap::new();
    let mut warnings = BTreeSet::new();
    for task in [Task::Argument, Task::Stance, Task::Joint] {
        let hp = match level {
            Level::Token => human_performance(gold_tokens, labelings, task, level)?,
            Level::Sentence => {
                human_performance(gold_sentences, &annotator_sentences, task, level)?
            }
        };
        for (id, f1) in hp.per_annotator {
            per_annotator_f1.entry(id).or_default().insert(task, f1);
        }
        hp_mean.insert(task, hp.mean);
        hp_std.insert(task, hp.std);
        warnings.extend(hp.warnings.into_iter().map(|w| format!("{task}: {w}")));
    }

    Ok(AgreementReport {
        u_alpha: u,
        cu_alpha: cu,
        n_pairable_units: tokens.pairable_units(),
        n_segment_pairs: segments.pairable_units(),
        level,
        per_annotator_f1,
        hp_mean,
        hp_std,
        warnings: warnings.into_iter().collect(),
    })
}
