//! Dataset construction: stratified review sampling, stratified splits,
//! task label mapping, class weights and distribution statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Decision, Label, Level, Review, SentenceLabeling, Task, TaskLabel, TokenLabeling,
};
use crate::error::{Error, Result};

pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];
const RATIO_TOLERANCE: f64 = 1e-9;

/// Smallest class size accepted by [`stratified_split`].
pub const MIN_CLASS_SIZE: usize = 3;

/// Maps annotation labels into a task's label space.
pub fn map_to_task(labels: &[Label], task: Task) -> Result<Vec<TaskLabel>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| task.map(l).ok_or(Error::StanceOnNon(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Train, validation, test.
    pub ratios: [f64; 3],
    pub seed: u64,
    pub stratify_on: Task,
}

impl SplitSpec {
    pub fn new(seed: u64, stratify_on: Task) -> Self {
        SplitSpec {
            ratios: DEFAULT_RATIOS,
            seed,
            stratify_on,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "split ratios must be positive, got {:?}",
                self.ratios
            )));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Splits `total` items by `ratios` with largest-remainder rounding.
///
/// Fractional parts closer than 1e-9 count as equal; ties go to the earlier
/// ratio.
pub fn largest_remainder(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut sizes: Vec<usize> = quotas
        .iter()
        .map(|q| (q + RATIO_TOLERANCE).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    let mut remaining = total.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    let frac = |i: usize| quotas[i] - sizes[i] as f64;
    order.sort_by(|&a, &b| {
        let (fa, fb) = (frac(a), frac(b));
        if (fa - fb).abs() <= RATIO_TOLERANCE {
            a.cmp(&b)
        } else {
            fb.total_cmp(&fa)
        }
    });
    for i in order {
        if remaining == 0 {
            break;
        }
        sizes[i] += 1;
        remaining -= 1;
    }
    sizes
}

/// Indices into the split input, each list sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

fn class_rng(seed: u64, class_position: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class_position as u64);
    rng
}

/// Class-stratified train/validation/test split.
///
/// Items are identified by their keys: within a class, items are ordered by
/// key and shuffled by ChaCha8 seeded with `spec.seed` on the stream of the
/// class position. Membership therefore depends only on keys, labels and
/// the seed, never on input order.
pub fn stratified_split<K: Ord>(
    items: &[(K, TaskLabel)],
    spec: &SplitSpec,
) -> Result<SplitAssignment> {
    spec.validate()?;
    let classes = spec.stratify_on.classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, (_, label)) in items.iter().enumerate() {
        let pos = classes.iter().position(|c| c == label).ok_or_else(|| {
            Error::Validation(format!(
                "item {i} has label {label}, not a {} class",
                spec.stratify_on
            ))
        })?;
        by_class[pos].push(i);
    }

    let mut assignment = SplitAssignment::default();
    for (pos, mut members) in by_class.into_iter().enumerate() {
        if members.len() < MIN_CLASS_SIZE {
            return Err(Error::ClassTooSmall {
                class: classes[pos].to_string(),
                count: members.len(),
                min: MIN_CLASS_SIZE,
            });
        }
        members.sort_by(|&a, &b| items[a].0.cmp(&items[b].0));
        if let Some(w) = members.windows(2).find(|w| items[w[0]].0 == items[w[1]].0) {
            return Err(Error::Validation(format!(
                "items {} and {} share the same key",
                w[0], w[1]
            )));
        }
        members.shuffle(&mut class_rng(spec.seed, pos));
        let sizes = largest_remainder(members.len(), &spec.ratios);
        let (train, rest) = members.split_at(sizes[0]);
        let (val, test) = rest.split_at(sizes[1]);
        assignment.train.extend_from_slice(train);
        assignment.val.extend_from_slice(val);
        assignment.test.extend_from_slice(test);
    }
    assignment.train.sort_unstable();
    assignment.val.sort_unstable();
    assignment.test.sort_unstable();
    Ok(assignment)
}

/// Stratum of a review within its conference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StratumKey {
    pub conference: String,
    pub rating: u8,
    pub decision: Decision,
    /// Quartile (1..=4) of the review's token count within its conference.
    pub length_bucket: u8,
}

/// Quartile bucket of `len` given the sorted lengths of its conference.
fn length_bucket(sorted_lengths: &[usize], len: usize) -> u8 {
    let m = sorted_lengths.len();
    let cut = |k: usize| sorted_lengths[(k * m).div_ceil(4).max(1) - 1];
    1 + (1..=3).filter(|&k| len > cut(k)).count() as u8
}

/// Strata keys for every review of the pool, in pool order.
pub fn stratum_keys(pool: &[Review]) -> Result<Vec<StratumKey>> {
    let mut lengths: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for r in pool {
        lengths.entry(&r.conference).or_default().push(r.n_tokens());
    }
    for v in lengths.values_mut() {
        v.sort_unstable();
    }
    pool.iter()
        .map(|r| {
            Ok(StratumKey {
                conference: r.conference.clone(),
                rating: r.rating_required()?,
                decision: r.decision_required()?,
                length_bucket: length_bucket(&lengths[r.conference.as_str()], r.n_tokens()),
            })
        })
        .collect()
}

/// Draws `n` distinct reviews: each draw first picks a conference uniformly
/// among those with reviews left, then the stratum of that conference whose
/// share among the conference's picks lags furthest behind its share in the
/// pool, then a review of that stratum uniformly. Returns pool indices in
/// draw order.
pub fn sample_indices_for_annotation(pool: &[Review], n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {n} reviews from a pool of {}",
            pool.len()
        )));
    }
    let keys = stratum_keys(pool)?;

    struct Stratum {
        pool_size: usize,
        remaining: Vec<usize>,
        picked: usize,
    }
    struct Conference {
        pool_size: usize,
        picked: usize,
        strata: BTreeMap<StratumKey, Stratum>,
    }
    let mut conferences: BTreeMap<&str, Conference> = BTreeMap::new();
    for (i, key) in keys.iter().enumerate() {
        let conf = conferences
            .entry(pool[i].conference.as_str())
            .or_insert_with(|| Conference {
                pool_size: 0,
                picked: 0,
                strata: BTreeMap::new(),
            });
        conf.pool_size += 1;
        let stratum = conf.strata.entry(key.clone()).or_insert_with(|| Stratum {
            pool_size: 0,
            remaining: Vec::new(),
            picked: 0,
        });
        stratum.pool_size += 1;
        stratum.remaining.push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = Vec::with_capacity(n);
    for _ in 0..n {
        let open: Vec<&str> = conferences
            .iter()
            .filter(|(_, c)| c.picked < c.pool_size)
            .map(|(name, _)| *name)
            .collect();
        let conf = conferences
            .get_mut(open[rng.gen_range(0..open.len())])
            .expect("open conference exists");

        let target = (conf.picked + 1) as f64;
        let deficits: Vec<(f64, &StratumKey)> = conf
            .strata
            .iter()
            .filter(|(_, s)| !s.remaining.is_empty())
            .map(|(k, s)| {
                let share = s.pool_size as f64 / conf.pool_size as f64;
                (share * target - s.picked as f64, k)
            })
            .collect();
        let best = deficits
            .iter()
            .map(|(d, _)| *d)
            .fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<StratumKey> = deficits
            .iter()
            .filter(|(d, _)| best - d <= 1e-12)
            .map(|(_, k)| (*k).clone())
            .collect();
        let key = &tied[rng.gen_range(0..tied.len())];

        let stratum = conf.strata.get_mut(key).expect("stratum exists");
        let pick = rng.gen_range(0..stratum.remaining.len());
        let index = stratum.remaining.swap_remove(pick);
        stratum.picked += 1;
        conf.picked += 1;
        selected.push(index);
    }
    Ok(selected)
}

pub fn sample_for_annotation(pool: &[Review], n: usize, seed: u64) -> Result<Vec<&Review>> {
    Ok(sample_indices_for_annotation(pool, n, seed)?
        .into_iter()
        .map(|i| &pool[i])
        .collect())
}

/// Per-class loss weights, the reciprocal of the class count in the
/// training labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub task: Task,
    pub counts: BTreeMap<TaskLabel, usize>,
    pub weights: BTreeMap<TaskLabel, f64>,
}

pub fn class_weights(train: &[TaskLabel], task: Task) -> Result<ClassWeights> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training labels".into()));
    }
    let mut counts = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for &class in task.classes() {
        let n = train.iter().filter(|&&l| l == class).count();
        if n == 0 {
            return Err(Error::ZeroCount(class.to_string()));
        }
        counts.insert(class, n);
        weights.insert(class, 1.0 / n as f64);
    }
    if let Some(l) = train.iter().find(|l| !task.classes().contains(l)) {
        return Err(Error::Validation(format!(
            "label {l} is not a {task} class"
        )));
    }
    Ok(ClassWeights {
        task,
        counts,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: TaskLabel,
    pub count: usize,
    /// Percentage rounded to one decimal.
    pub percent: f64,
    /// Percentage rounded to an integer.
    pub percent_int: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDistribution {
    pub level: Level,
    pub total: usize,
    pub classes: Vec<ClassShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub task: Task,
    pub levels: Vec<LevelDistribution>,
}

fn level_distribution<'a, I>(level: Level, labels: I, task: Task) -> LevelDistribution
where
    I: IntoIterator<Item = &'a Label>,
{
    let mut counts: BTreeMap<TaskLabel, usize> = task.classes().iter().map(|&c| (c, 0)).collect();
    for &label in labels {
        if let Some(mapped) = task.map(label) {
            *counts.get_mut(&mapped).expect("task class") += 1;
        }
    }
    let total: usize = counts.values().sum();
    let classes = task
        .classes()
        .iter()
        .map(|&class| {
            let count = counts[&class];
            let pct = if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            };
            ClassShare {
                class,
                count,
                percent: (pct * 10.0).round() / 10.0,
                percent_int: pct.round() as u32,
            }
        })
        .collect();
    LevelDistribution {
        level,
        total,
        classes,
    }
}

/// Class counts and percentages at token and sentence level. Under the
/// stance task only PRO/CON units are counted.
pub fn distribution_stats(
    tokens: &[TokenLabeling],
    sentences: &[SentenceLabeling],
    task: Task,
) -> Result<DistributionStats> {
    if tokens.is_empty() && sentences.is_empty() {
        return Err(Error::InvalidArgument("no gold labelings given".into()));
    }
    let mut levels = Vec::new();
    if !tokens.is_empty() {
        levels.push(level_distribution(
            Level::Token,
            tokens.iter().flat_map(|l| &l.labels),
            task,
        ));
    }
    if !sentences.is_empty() {
        levels.push(level_distribution(
            Level::Sentence,
            sentences.iter().flat_map(|l| &l.labels),
            task,
        ));
    }
    Ok(DistributionStats { task, levels })
}

impl fmt::Display for DistributionStats {
    /// Tab-separated table with a header row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "level\tclass\tcount\tpercent\tpercent_int")?;
        for level in &self.levels {
            for c in &level.classes {
                writeln!(
                    f,
                    "{}\t{}\t{}\t{:.1}\t{}",
                    level.level, c.class, c.count, c.percent, c.percent_int
                )?;
            }
            writeln!(f, "{}\tTOTAL\t{}\t100.0\t100", level.level, level.total)?;
        }
        Ok(())
    }
}

/// Rejects duplicate keys, used before building split items.
pub fn check_unique_keys<K: std::hash::Hash + Eq + fmt::Debug>(keys: &[K]) -> Result<()> {
    let mut seen = HashSet::new();
    for k in keys {
        if !seen.insert(k) {
            return Err(Error::Validation(format!("duplicate unit {k:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenSpan;
    use TaskLabel::{Arg, Con, Non, Pro};

    fn items(labels: &[(TaskLabel, usize)]) -> Vec<(usize, TaskLabel)> {
        let mut v = Vec::new();
        for &(label, n) in labels {
            for _ in 0..n {
                v.push((v.len(), label));
            }
        }
        v
    }

    #[test]
    fn single_class_seven_one_two() {
        let spec = SplitSpec::new(1, Task::Stance);
        let data = items(&[(Pro, 10), (Con, 10)]);
        let split = stratified_split(&data, &spec).unwrap();
        assert_eq!(
            (split.train.len(), split.val.len(), split.test.len()),
            (14, 2, 4)
        );
    }

    #[test]
    fn largest_remainder_rounding() {
        assert_eq!(largest_remainder(10, &DEFAULT_RATIOS), vec![7, 1, 2]);
        assert_eq!(largest_remainder(203, &DEFAULT_RATIOS), vec![142, 20, 41]);
        assert_eq!(largest_remainder(640, &DEFAULT_RATIOS), vec![448, 64, 128]);
        assert_eq!(largest_remainder(558, &DEFAULT_RATIOS), vec![391, 56, 111]);
        assert_eq!(largest_remainder(3, &DEFAULT_RATIOS), vec![2, 0, 1]);
    }

    #[test]
    fn small_class_is_named() {
        let spec = SplitSpec::new(1, Task::Joint);
        let data = items(&[(Pro, 5), (Con, 2), (Non, 5)]);
        match stratified_split(&data, &spec) {
            Err(Error::ClassTooSmall {
                class, count: 2, ..
            }) => assert_eq!(class, "CON"),
            other => panic!("expected class-size error, got {other:?}"),
        }
    }

    #[test]
    fn bad_ratios() {
        let mut spec = SplitSpec::new(1, Task::Joint);
        spec.ratios = [0.7, 0.2, 0.2];
        assert!(spec.validate().is_err());
        spec.ratios = [0.8, 0.0, 0.2];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn foreign_label_and_duplicate_keys() {
        let spec = SplitSpec::new(1, Task::Stance);
        let mut data = items(&[(Pro, 5), (Con, 5)]);
        data.push((99, Non));
        assert!(stratified_split(&data, &spec).is_err());
        let dup = vec![(1, Pro), (1, Pro), (2, Pro), (3, Con), (4, Con), (5, Con)];
        assert!(stratified_split(&dup, &spec).is_err());
    }

    #[test]
    fn task_mapping() {
        use Label as L;
        assert_eq!(
            map_to_task(&[L::Pro, L::Non, L::Con], Task::Argument).unwrap(),
            vec![Arg, Non, Arg]
        );
        assert_eq!(
            map_to_task(&[L::Pro, L::Non, L::Con], Task::Joint).unwrap(),
            vec![Pro, Non, Con]
        );
        assert!(matches!(
            map_to_task(&[L::Pro, L::Non], Task::Stance),
            Err(Error::StanceOnNon(1))
        ));
    }

    #[test]
    fn weights_are_reciprocal_counts() {
        let train = [Arg, Arg, Non, Non, Non, Non];
        let w = class_weights(&train, Task::Argument).unwrap();
        assert_eq!(w.weights[&Arg], 0.5);
        assert_eq!(w.weights[&Non], 0.25);
        assert!(matches!(
            class_weights(&[Arg, Arg], Task::Argument),
            Err(Error::ZeroCount(c)) if c == "NON"
        ));
        assert!(class_weights(&[], Task::Argument).is_err());
    }

    #[test]
    fn sentence_stats_single_class() {
        let s = SentenceLabeling {
            review_id: "r".into(),
            labels: vec![Label::Pro; 4],
            provenance: crate::corpus::Provenance::Gold,
        };
        let stats = distribution_stats(&[], &[s], Task::Joint).unwrap();
        let pcts: Vec<f64> = stats.levels[0].classes.iter().map(|c| c.percent).collect();
        assert_eq!(pcts, vec![100.0, 0.0, 0.0]);
        assert!(stats.to_string().starts_with("level\tclass"));
    }

    fn pool_review(id: usize, conference: &str, n_tokens: usize) -> Review {
        Review {
            review_id: format!("r{id}"),
            paper_id: format!("p{id}"),
            conference: conference.into(),
            rating: Some((id % 4) as u8 + 1),
            decision: Some(if id.is_multiple_of(3) {
                Decision::Accept
            } else {
                Decision::Reject
            }),
            tokens: vec!["w".into(); n_tokens],
            sentence_bounds: vec![TokenSpan::new(0, n_tokens)],
        }
    }

    #[test]
    fn sampling_basics() {
        let pool: Vec<Review> = (0..30)
            .map(|i| pool_review(i, ["a", "b", "c"][i % 3], 5 + i))
            .collect();
        let all = sample_indices_for_annotation(&pool, 30, 7).unwrap();
        let set: HashSet<usize> = all.iter().copied().collect();
        assert_eq!(set.len(), 30);
        assert_eq!(
            sample_indices_for_annotation(&pool, 12, 3).unwrap(),
            sample_indices_for_annotation(&pool, 12, 3).unwrap()
        );
        assert!(sample_indices_for_annotation(&pool, 31, 3).is_err());

        let mut missing = pool.clone();
        missing[4].rating = None;
        assert!(matches!(
            sample_indices_for_annotation(&missing, 3, 3),
            Err(Error::MissingField {
                field: "rating",
                ..
            })
        ));
    }

    #[test]
    fn length_quartiles() {
        let lengths: Vec<usize> = (1..=8).collect();
        let buckets: Vec<u8> = lengths
            .iter()
            .map(|&l| length_bucket(&lengths, l))
            .collect();
        assert_eq!(buckets, vec![1, 1, 2, 2, 3, 3, 4, 4]);
        assert_eq!(length_bucket(&[5], 5), 1);
    }
}
