//! Review condensation: keep the k% most argumentative sentences of every
//! review (or a random k%), then combine the reviews of each paper.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Decision, ProbabilityRecord, Review};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Full,
    Topk,
    Randomk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub mode: SelectionMode,
    /// Percentage in (0, 100]; ignored in full mode.
    pub k_percent: Option<f64>,
    pub seed: u64,
}

impl SelectionSpec {
    pub fn full() -> Self {
        SelectionSpec {
            mode: SelectionMode::Full,
            k_percent: None,
            seed: 0,
        }
    }

    pub fn top_k(k_percent: f64) -> Self {
        SelectionSpec {
            mode: SelectionMode::Topk,
            k_percent: Some(k_percent),
            seed: 0,
        }
    }

    pub fn random_k(k_percent: f64, seed: u64) -> Self {
        SelectionSpec {
            mode: SelectionMode::Randomk,
            k_percent: Some(k_percent),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.k_percent) {
            (SelectionMode::Full, _) => Ok(()),
            (_, None) => Err(Error::InvalidArgument(
                "k_percent is required for topk and randomk".into(),
            )),
            (_, Some(k)) if !(k > 0.0 && k <= 100.0) => Err(Error::InvalidArgument(format!(
                "k_percent must lie in (0, 100], got {k}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Number of sentences kept out of `n`: the ceiling of `k% * n`, at least
/// one for a nonempty review.
pub fn kept_count(n: usize, k_percent: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let exact = k_percent * n as f64 / 100.0;
    ((exact - 1e-9).ceil().max(1.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedReview {
    pub review_id: String,
    /// Strictly increasing.
    pub kept_sentence_indices: Vec<usize>,
    pub kept_fraction: f64,
}

fn fnv1a(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Chooses the sentences of `review` to keep. `probs` may contain records
/// of other reviews; they are ignored.
pub fn select_sentences(
    review: &Review,
    probs: &[ProbabilityRecord],
    spec: &SelectionSpec,
) -> Result<CondensedReview> {
    spec.validate()?;
    let n = review.n_sentences();
    let mut kept: Vec<usize> = match spec.mode {
        SelectionMode::Full => (0..n).collect(),
        SelectionMode::Topk => {
            let mut p = vec![None; n];
            for rec in probs.iter().filter(|r| r.review_id == review.review_id) {
                rec.validate()?;
                let slot = p.get_mut(rec.sentence_index).ok_or_else(|| {
                    Error::Validation(format!(
                        "sentence_index {} out of range for review `{}` with {n} sentences",
                        rec.sentence_index, review.review_id
                    ))
                })?;
                *slot = Some(rec.p_arg);
            }
            let missing: Vec<usize> = (0..n).filter(|&i| p[i].is_none()).collect();
            if !missing.is_empty() {
                return Err(Error::MissingProbabilities {
                    review_id: review.review_id.clone(),
                    missing,
                });
            }
            let mut order: Vec<(f64, usize)> = p.iter().map(|v| v.unwrap()).zip(0..).collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let m = kept_count(n, spec.k_percent.unwrap());
            order.into_iter().take(m).map(|(_, i)| i).collect()
        }
        SelectionMode::Randomk => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ fnv1a(&review.review_id));
            let m = kept_count(n, spec.k_percent.unwrap());
            rand::seq::index::sample(&mut rng, n, m).into_vec()
        }
    };
    kept.sort_unstable();
    Ok(CondensedReview {
        review_id: review.review_id.clone(),
        kept_fraction: if n == 0 {
            0.0
        } else {
            kept.len() as f64 / n as f64
        },
        kept_sentence_indices: kept,
    })
}

/// Selections for every review, probabilities grouped once.
pub fn select_all(
    reviews: &[Review],
    probs: &[ProbabilityRecord],
    spec: &SelectionSpec,
) -> Result<Vec<CondensedReview>> {
    let mut by_review: HashMap<&str, Vec<ProbabilityRecord>> = HashMap::new();
    for rec in probs {
        by_review
            .entry(&rec.review_id)
            .or_default()
            .push(rec.clone());
    }
    crate::corpus::check_probabilities_against(reviews, probs)?;
    reviews
        .iter()
        .map(|r| {
            let own = by_review
                .get(r.review_id.as_str())
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            select_sentences(r, own, spec)
        })
        .collect()
}

/// One paper's condensed document, the hand-off record for a downstream
/// decision classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondensedPaper {
    pub paper_id: String,
    pub decision: Decision,
    pub text: String,
}

/// Combines the kept sentences of every paper's reviews, in review order
/// and then sentence order. Sentences are joined by a space and reviews by
/// a newline. Papers come out sorted by id; papers without a decision are
/// skipped and reported in the returned warnings.
pub fn emit_condensed(
    reviews: &[Review],
    selections: &[CondensedReview],
) -> Result<(Vec<CondensedPaper>, Vec<String>)> {
    let by_review: HashMap<&str, &CondensedReview> = selections
        .iter()
        .map(|s| (s.review_id.as_str(), s))
        .collect();
    let mut papers: BTreeMap<&str, Vec<&Review>> = BTreeMap::new();
    for r in reviews {
        papers.entry(&r.paper_id).or_default().push(r);
    }

    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (paper_id, members) in papers {
        let decisions: Vec<Option<Decision>> = members.iter().map(|r| r.decision).collect();
        let Some(decision) = decisions.iter().flatten().next().copied() else {
            warnings.push(format!("paper `{paper_id}` has no decision, skipped"));
            continue;
        };
        if decisions.iter().flatten().any(|&d| d != decision) {
            return Err(Error::Validation(format!(
                "reviews of paper `{paper_id}` disagree on the decision"
            )));
        }
        let mut parts = Vec::with_capacity(members.len());
        for review in members {
            let selection = by_review.get(review.review_id.as_str()).ok_or_else(|| {
                Error::Validation(format!("review `{}` has no selection", review.review_id))
            })?;
            let sentences: Vec<String> = selection
                .kept_sentence_indices
                .iter()
                .map(|&i| {
                    if i >= review.n_sentences() {
                        return Err(Error::Validation(format!(
                            "selection of review `{}` keeps sentence {i}, out of range",
                            review.review_id
                        )));
                    }
                    Ok(review.sentence_text(i))
                })
                .collect::<Result<_>>()?;
            parts.push(sentences.join(" "));
        }
        out.push(CondensedPaper {
            paper_id: paper_id.to_string(),
            decision,
            text: parts.join("\n"),
        });
    }
    Ok((out, warnings))
}

pub fn write_condensed(papers: &[CondensedPaper], path: impl AsRef<Path>) -> Result<()> {
    crate::corpus::io::write_text(path.as_ref(), &crate::corpus::io::json_lines(papers)?)
}
