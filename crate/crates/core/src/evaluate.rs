//! Scoring: per-class precision/recall/F1, macro-F1, the majority baseline,
//! aggregation over seeds and Welch's two-sided t-test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Level, Task, TaskLabel};
use crate::error::{Error, Result};
use crate::stats;

/// Counts of (gold, predicted) pairs. Merging is plain addition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: BTreeMap<TaskLabel, BTreeMap<TaskLabel, usize>>,
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(gold: &[TaskLabel], pred: &[TaskLabel]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::LengthMismatch {
                what: "predictions".into(),
                expected: gold.len(),
                found: pred.len(),
            });
        }
        let mut m = Self::new();
        for (&g, &p) in gold.iter().zip(pred) {
            m.add(g, p);
        }
        Ok(m)
    }

    pub fn add(&mut self, gold: TaskLabel, pred: TaskLabel) {
        *self
            .counts
            .entry(gold)
            .or_default()
            .entry(pred)
            .or_default() += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (g, row) in &other.counts {
            for (p, n) in row {
                *self.counts.entry(*g).or_default().entry(*p).or_default() += n;
            }
        }
    }

    pub fn get(&self, gold: TaskLabel, pred: TaskLabel) -> usize {
        self.counts
            .get(&gold)
            .and_then(|row| row.get(&pred))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().flat_map(|row| row.values()).sum()
    }

    /// Number of units whose gold label is `class`.
    pub fn support(&self, class: TaskLabel) -> usize {
        self.counts.get(&class).map_or(0, |row| row.values().sum())
    }

    /// Number of units predicted as `class`.
    pub fn predicted(&self, class: TaskLabel) -> usize {
        self.counts.values().filter_map(|row| row.get(&class)).sum()
    }

    pub fn counts(&self) -> &BTreeMap<TaskLabel, BTreeMap<TaskLabel, usize>> {
        &self.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub level: Level,
    pub per_class: BTreeMap<TaskLabel, ClassScores>,
    pub macro_f1: f64,
    pub n_units: usize,
    pub confusion: ConfusionMatrix,
    /// Classes with no gold unit; scored 0.
    pub zero_support: Vec<TaskLabel>,
    /// Classes where precision, recall or F1 hit a zero denominator; scored 0.
    pub zero_division: Vec<TaskLabel>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Builds a report from accumulated counts. Macro-F1 averages over every
/// class of `task`, including classes without support.
pub fn report_from_confusion(confusion: ConfusionMatrix, task: Task, level: Level) -> EvalReport {
    let mut per_class = BTreeMap::new();
    let mut zero_support = Vec::new();
    let mut zero_division = Vec::new();
    for &class in task.classes() {
        let tp = confusion.get(class, class);
        let support = confusion.support(class);
        let predicted = confusion.predicted(class);
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        if support == 0 {
            zero_support.push(class);
        }
        if precision.is_none() || recall.is_none() || f1.is_none() {
            zero_division.push(class);
        }
        per_class.insert(
            class,
            ClassScores {
                precision: precision.unwrap_or(0.0),
                recall: recall.unwrap_or(0.0),
                f1: f1.unwrap_or(0.0),
                support,
            },
        );
    }
    let macro_f1 = per_class.values().map(|c| c.f1).sum::<f64>() / task.classes().len() as f64;
    EvalReport {
        task,
        level,
        per_class,
        macro_f1,
        n_units: confusion.total(),
        confusion,
        zero_support,
        zero_division,
    }
}

fn check_in_task(labels: &[TaskLabel], task: Task, what: &str) -> Result<()> {
    match labels.iter().position(|l| !task.classes().contains(l)) {
        Some(i) => Err(Error::Validation(format!(
            "{what} label {} at index {i} is not a {task} class",
            labels[i]
        ))),
        None => Ok(()),
    }
}

/// Scores task-mapped predictions against task-mapped gold labels.
pub fn score(
    pred: &[TaskLabel],
    gold: &[TaskLabel],
    task: Task,
    level: Level,
) -> Result<EvalReport> {
    check_in_task(gold, task, "gold")?;
    check_in_task(pred, task, "predicted")?;
    let confusion = ConfusionMatrix::from_pairs(gold, pred)?;
    Ok(report_from_confusion(confusion, task, level))
}

/// Most frequent class of `labels` among the task classes; ties go to the
/// class listed first by [`Task::classes`].
pub fn majority_class(labels: &[TaskLabel], task: Task) -> Option<TaskLabel> {
    if labels.is_empty() {
        return None;
    }
    let mut best: Option<(TaskLabel, usize)> = None;
    for &class in task.classes() {
        let n = labels.iter().filter(|&&l| l == class).count();
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((class, n));
        }
    }
    best.map(|(c, _)| c)
}

/// Constant prediction of the majority class of `train`, scored on `gold`.
pub fn majority_baseline_from(
    train: &[TaskLabel],
    gold: &[TaskLabel],
    task: Task,
    level: Level,
) -> Result<EvalReport> {
    check_in_task(train, task, "training")?;
    let class = majority_class(train, task)
        .ok_or_else(|| Error::InvalidArgument("majority baseline needs training labels".into()))?;
    score(&vec![class; gold.len()], gold, task, level)
}

/// Majority baseline with the majority class taken from `gold` itself.
pub fn majority_baseline(gold: &[TaskLabel], task: Task, level: Level) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument(
            "majority baseline needs gold labels".into(),
        ));
    }
    majority_baseline_from(gold, gold, task, level)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1`).
    pub std: f64,
}

pub fn aggregate_seeds(scores: &[f64]) -> Result<SeedAggregate> {
    if scores.len() < 2 {
        return Err(Error::NotEnoughScores(scores.len()));
    }
    Ok(SeedAggregate {
        scores: scores.to_vec(),
        mean: stats::mean(scores),
        std: stats::sample_std(scores),
    })
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub significant_at_1pct: bool,
    /// Both groups have zero variance, so the statistic is not finite.
    pub degenerate: bool,
}

/// Two-sided, unpaired Welch t-test with Welch–Satterthwaite degrees of
/// freedom.
///
/// Two constant groups are a degenerate case: equal means give `p = 1`,
/// different means give `p = 0` with an infinite statistic.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::NotEnoughScores(a.len().min(b.len())));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let (va, vb) = (
        stats::sample_variance(a) / na,
        stats::sample_variance(b) / nb,
    );
    let se2 = va + vb;
    let result = |t_stat: f64, dof: f64, p_value: f64, degenerate: bool| TTestResult {
        t_stat,
        dof,
        p_value,
        significant_at_1pct: p_value < SIGNIFICANCE_LEVEL,
        degenerate,
    };
    if se2 == 0.0 {
        let dof = na + nb - 2.0;
        return Ok(if ma == mb {
            result(0.0, dof, 1.0, true)
        } else {
            result(f64::INFINITY.copysign(ma - mb), dof, 0.0, true)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(result(t, dof, stats::student_t_two_sided(t, dof), false))
}
