mod common;

use std::collections::BTreeSet;

use common::review_with_sentences;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revarg::corpus::{ProbabilityRecord, Review};
use revarg::select::{emit_condensed, kept_count, select_all, select_sentences, SelectionSpec};
use revarg::{Decision, Error};

fn probs(review: &Review, p: &[f64]) -> Vec<ProbabilityRecord> {
    p.iter()
        .enumerate()
        .map(|(i, &p_arg)| ProbabilityRecord {
            review_id: review.review_id.clone(),
            sentence_index: i,
            p_arg,
        })
        .collect()
}

/// Smallest m >= 1 with 100 * m >= k * n, for whole-number k.
fn kept_count_oracle(n: usize, k: usize) -> usize {
    (1..=n).find(|m| 100 * m >= k * n).unwrap_or(n)
}

#[test]
fn kept_count_matches_integer_oracle() {
    for n in 1..=60 {
        for k in 1..=100 {
            assert_eq!(
                kept_count(n, k as f64),
                kept_count_oracle(n, k),
                "n={n} k={k}"
            );
        }
    }
    assert_eq!(kept_count(0, 50.0), 0);
}

#[test]
fn top_k_sets_are_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    for v in 0..1000 {
        let n = rng.gen_range(1..40);
        let review = review_with_sentences(&format!("r{v}"), &vec![3; n]);
        // coarse values so that ties are common
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
        let records = probs(&review, &p);
        let mut previous: BTreeSet<usize> = BTreeSet::new();
        for k in (10..=100).step_by(10) {
            let kept: BTreeSet<usize> =
                select_sentences(&review, &records, &SelectionSpec::top_k(k as f64))
                    .unwrap()
                    .kept_sentence_indices
                    .into_iter()
                    .collect();
            assert!(previous.is_subset(&kept), "vector {v}, k={k}");
            // every kept sentence scores at least as high as every dropped one
            let min_kept = kept.iter().map(|&i| p[i]).fold(f64::INFINITY, f64::min);
            assert!((0..n)
                .filter(|i| !kept.contains(i))
                .all(|i| p[i] <= min_kept));
            previous = kept;
        }
        assert_eq!(previous.len(), n);
    }
}

#[test]
fn missing_probabilities_are_listed() {
    let review = review_with_sentences("r", &[3, 3, 3, 3]);
    let mut records = probs(&review, &[0.1, 0.2, 0.3, 0.4]);
    records.retain(|r| r.sentence_index % 2 == 0);
    match select_sentences(&review, &records, &SelectionSpec::top_k(50.0)) {
        Err(Error::MissingProbabilities { missing, .. }) => assert_eq!(missing, vec![1, 3]),
        other => panic!("unexpected {other:?}"),
    }
    // random and full selection need no probabilities
    assert!(select_sentences(&review, &[], &SelectionSpec::random_k(50.0, 1)).is_ok());
    assert!(select_sentences(&review, &[], &SelectionSpec::full()).is_ok());
}

proptest! {
    #[test]
    fn kept_fraction_bounds(n in 1usize..80, k in 0.5f64..100.0, seed in any::<u64>()) {
        let review = review_with_sentences("r", &vec![3; n]);
        let p: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let records = probs(&review, &p);
        for spec in [SelectionSpec::top_k(k), SelectionSpec::random_k(k, seed)] {
            let c = select_sentences(&review, &records, &spec).unwrap();
            let target = k / 100.0;
            prop_assert_eq!(c.kept_sentence_indices.len(), kept_count(n, k));
            prop_assert!(c.kept_sentence_indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(c.kept_sentence_indices.iter().all(|&i| i < n));
            prop_assert!(c.kept_fraction >= target - 1e-9 || c.kept_sentence_indices.len() == n);
            // the one-sentence floor may overshoot; otherwise ceiling slack only
            if target * n as f64 >= 1.0 {
                prop_assert!(c.kept_fraction - target < 1.0 / n as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn random_k_is_reproducible(lengths in prop::collection::vec(1usize..30, 1..8), k in 1.0f64..100.0, seed in any::<u64>()) {
        let reviews: Vec<Review> = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| review_with_sentences(&format!("r{i}"), &vec![3; n]))
            .collect();
        let spec = SelectionSpec::random_k(k, seed);
        let first = select_all(&reviews, &[], &spec).unwrap();
        prop_assert_eq!(&first, &select_all(&reviews, &[], &spec).unwrap());
        // selection of one review does not depend on the others
        let alone = select_all(&reviews[..1], &[], &spec).unwrap();
        prop_assert_eq!(&first[0], &alone[0]);
        for (c, r) in first.iter().zip(&reviews) {
            prop_assert_eq!(c.kept_sentence_indices.len(), kept_count(r.n_sentences(), k));
        }
    }
}

#[test]
fn full_and_top_100_emit_the_same_text() {
    let mut reviews = vec![
        review_with_sentences("a", &[3, 4, 3]),
        review_with_sentences("b", &[5, 3]),
    ];
    reviews[1].paper_id = reviews[0].paper_id.clone();
    for r in &mut reviews {
        r.decision = Some(Decision::Accept);
    }
    let mut records = probs(&reviews[0], &[0.2, 0.9, 0.5]);
    records.extend(probs(&reviews[1], &[0.4, 0.1]));
    let full = select_all(&reviews, &records, &SelectionSpec::full()).unwrap();
    let top = select_all(&reviews, &records, &SelectionSpec::top_k(100.0)).unwrap();
    assert_eq!(full, top);
    let (papers, warnings) = emit_condensed(&reviews, &full).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(papers.len(), 1);
    let want = format!(
        "{}\n{}",
        (0..3)
            .map(|s| reviews[0].sentence_text(s))
            .collect::<Vec<_>>()
            .join(" "),
        (0..2)
            .map(|s| reviews[1].sentence_text(s))
            .collect::<Vec<_>>()
            .join(" "),
    );
    assert_eq!(papers[0].text, want);
}
