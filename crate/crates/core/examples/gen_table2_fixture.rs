//! Writes the synthetic 77-review annotation fixture under
//! `tests/fixtures/table2/` (or the directory given as first argument).
//!
//! Gold labels are laid out first with fixed class totals; three annotators
//! per review then copy the gold with noise that never reaches a majority,
//! plus a few three-way conflicts settled by a fourth annotator.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revarg::annotate::{self, extract_segments, Assignments};
use revarg::corpus::{self, Decision, Label, Review, SpanAnnotation, TokenSpan};

const SEED: u64 = 20_201;
const PRO_TOKENS: usize = 3_259;
const CON_TOKENS: usize = 10_559;
const NON_TOKENS: usize = 14_684;
const PRO_SENTENCES: usize = 203;
const CON_SENTENCES: usize = 640;
const NON_SENTENCES: usize = 558;
const NON_SENTENCE_TOKENS: usize = 9_486;
const MIXED_SENTENCES: usize = 40;
const CONFLICT_REVIEWS: usize = 20;
const ANNOTATORS: usize = 7;
const CONFERENCES: [(&str, usize); 6] = [
    ("iclr20", 15),
    ("iclr19", 14),
    ("midl19", 12),
    ("midl20", 12),
    ("neuroai19", 12),
    ("gi20", 12),
];
const WORDS: [&str; 24] = [
    "the",
    "model",
    "results",
    "paper",
    "method",
    "authors",
    "experiments",
    "is",
    "are",
    "clear",
    "novel",
    "weak",
    "baseline",
    "not",
    "convincing",
    "section",
    "data",
    "well",
    "written",
    "unclear",
    "proposed",
    "analysis",
    "strong",
    "limited",
];

/// Splits `total` into parts with the given minimums and random weights.
fn compose(rng: &mut ChaCha8Rng, total: usize, mins: &[usize]) -> Vec<usize> {
    let floor: usize = mins.iter().sum();
    assert!(floor <= total, "budget {total} below minimum {floor}");
    let weights: Vec<f64> = mins.iter().map(|_| rng.gen_range(0.3..2.0)).collect();
    let sum: f64 = weights.iter().sum();
    let ratios: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    let extra = revarg::datasetops::largest_remainder(total - floor, &ratios);
    mins.iter().zip(extra).map(|(m, e)| m + e).collect()
}

struct Layout {
    labels: Vec<Label>,
    bounds: Vec<TokenSpan>,
}

fn sentence_tokens(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let mut w = WORDS[rng.gen_range(0..WORDS.len())].to_string();
            if i == 0 {
                w[..1].make_ascii_uppercase();
            }
            if i + 1 == n {
                w.push('.');
            }
            w
        })
        .collect()
}

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table2"));
    std::fs::create_dir_all(&out_dir).expect("create fixture directory");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // sentence labels, shuffled over the corpus
    let mut sentence_labels: Vec<Label> = [
        (Label::Pro, PRO_SENTENCES),
        (Label::Con, CON_SENTENCES),
        (Label::Non, NON_SENTENCES),
    ]
    .iter()
    .flat_map(|&(l, n)| std::iter::repeat_n(l, n))
    .collect();
    sentence_labels.shuffle(&mut rng);

    let n_reviews: usize = CONFERENCES.iter().map(|c| c.1).sum();
    let per_review = compose(&mut rng, sentence_labels.len(), &vec![6; n_reviews]);

    let con_positions: Vec<usize> = (0..sentence_labels.len())
        .filter(|&i| sentence_labels[i] == Label::Con)
        .collect();
    let mixed: BTreeSet<usize> = con_positions
        .choose_multiple(&mut rng, MIXED_SENTENCES)
        .copied()
        .collect();
    let extras: Vec<usize> = (0..MIXED_SENTENCES).map(|_| rng.gen_range(1..=3)).collect();
    let extra_total: usize = extras.iter().sum();

    let pro_lengths = compose(&mut rng, PRO_TOKENS - extra_total, &[3; PRO_SENTENCES]);
    let con_mins: Vec<usize> = con_positions
        .iter()
        .map(|p| if mixed.contains(p) { 4 } else { 3 })
        .collect();
    let con_lengths = compose(&mut rng, CON_TOKENS, &con_mins);
    let non_lengths = compose(&mut rng, NON_SENTENCE_TOKENS, &[3; NON_SENTENCES]);
    let padding = compose(
        &mut rng,
        NON_TOKENS - NON_SENTENCE_TOKENS,
        &[0; PRO_SENTENCES + CON_SENTENCES],
    );

    // token layout of every sentence
    let (mut pro_i, mut con_i, mut non_i, mut pad_i, mut mixed_i) = (0, 0, 0, 0, 0);
    let mut sentences: Vec<Vec<Label>> = Vec::with_capacity(sentence_labels.len());
    for (pos, &label) in sentence_labels.iter().enumerate() {
        if label == Label::Non {
            sentences.push(vec![Label::Non; non_lengths[non_i]]);
            non_i += 1;
            continue;
        }
        let seg_len = if label == Label::Pro {
            pro_i += 1;
            pro_lengths[pro_i - 1]
        } else {
            con_i += 1;
            con_lengths[con_i - 1]
        };
        let mut pad = padding[pad_i];
        pad_i += 1;
        let extra = if mixed.contains(&pos) {
            mixed_i += 1;
            extras[mixed_i - 1]
        } else {
            0
        };
        let mut body = Vec::new();
        if pad >= 1 && seg_len >= 6 && rng.gen_bool(0.25) {
            let first = seg_len / 2;
            body.extend(std::iter::repeat_n(label, first));
            body.push(Label::Non);
            body.extend(std::iter::repeat_n(label, seg_len - first));
            pad -= 1;
        } else {
            body.extend(std::iter::repeat_n(label, seg_len));
        }
        body.extend(std::iter::repeat_n(Label::Pro, extra));
        let pre = rng.gen_range(0..=pad);
        let mut s = vec![Label::Non; pre];
        s.extend(body);
        s.extend(std::iter::repeat_n(Label::Non, pad - pre));
        sentences.push(s);
    }

    // reviews
    let mut reviews = Vec::new();
    let mut layouts = Vec::new();
    let mut next_sentence = 0;
    let mut review_index = 0;
    for &(conference, n) in &CONFERENCES {
        for k in 0..n {
            let count = per_review[review_index];
            review_index += 1;
            let mut tokens = Vec::new();
            let mut layout = Layout {
                labels: Vec::new(),
                bounds: Vec::new(),
            };
            for s in &sentences[next_sentence..next_sentence + count] {
                let start = tokens.len();
                tokens.extend(sentence_tokens(&mut rng, s.len()));
                layout.labels.extend_from_slice(s);
                layout.bounds.push(TokenSpan::new(start, tokens.len()));
            }
            next_sentence += count;
            reviews.push(Review {
                review_id: format!("{conference}-r{k:02}"),
                paper_id: format!("{conference}-p{:02}", k / 3),
                conference: conference.to_string(),
                rating: Some(rng.gen_range(1..=4)),
                decision: Some(if rng.gen_bool(0.4) {
                    Decision::Accept
                } else {
                    Decision::Reject
                }),
                sentence_bounds: layout.bounds.clone(),
                tokens,
            });
            layouts.push(layout);
        }
    }

    // annotators
    let annotator_ids: Vec<String> = (1..=ANNOTATORS).map(|i| format!("a{i}")).collect();
    let conflict_reviews: BTreeSet<usize> =
        rand::seq::index::sample(&mut rng, reviews.len(), CONFLICT_REVIEWS)
            .into_iter()
            .collect();
    let mut spans = Vec::new();
    let mut adjudication = Vec::new();
    let mut assignment_text = String::new();
    for (r, (review, layout)) in reviews.iter().zip(&layouts).enumerate() {
        let chosen: Vec<usize> = rand::seq::index::sample(&mut rng, ANNOTATORS, 3).into_vec();
        let mut copies = vec![layout.labels.clone(); 3];

        let conflict_sentence = if conflict_reviews.contains(&r) {
            let candidates: Vec<usize> = (0..layout.bounds.len())
                .filter(|&s| {
                    let b = layout.bounds[s];
                    longest_run(&layout.labels[b.range()]).is_some_and(|(_, len)| len >= 3)
                })
                .collect();
            candidates.choose(&mut rng).copied()
        } else {
            None
        };

        for (s, bound) in layout.bounds.iter().enumerate() {
            let range = bound.range();
            if Some(s) == conflict_sentence {
                let (start, _) = longest_run(&layout.labels[range.clone()]).unwrap();
                let at = range.start + start;
                let gold = layout.labels[at];
                let mut others: Vec<Label> =
                    Label::ALL.iter().copied().filter(|&l| l != gold).collect();
                others.shuffle(&mut rng);
                let mut order = [0, 1, 2];
                order.shuffle(&mut rng);
                copies[order[1]][at..at + 2].fill(others[0]);
                copies[order[2]][at..at + 2].fill(others[1]);
                continue;
            }
            if rng.gen_bool(0.35) {
                let who = rng.gen_range(0..3);
                perturb(&mut rng, &mut copies[who][range]);
            }
        }

        for (copy, &a) in copies.iter().zip(&chosen) {
            writeln!(
                assignment_text,
                "{}\t{}",
                review.review_id, annotator_ids[a]
            )
            .unwrap();
            spans.extend(to_spans(copy, &review.review_id, &annotator_ids[a]));
        }
        if conflict_sentence.is_some() {
            let free: Vec<usize> = (0..ANNOTATORS).filter(|a| !chosen.contains(a)).collect();
            let adjudicator = &annotator_ids[*free.choose(&mut rng).unwrap()];
            adjudication.extend(to_spans(&layout.labels, &review.review_id, adjudicator));
        }
    }

    corpus::write_reviews(&reviews, out_dir.join("reviews.jsonl")).unwrap();
    corpus::write_annotations(&spans, out_dir.join("annotations.jsonl")).unwrap();
    corpus::write_annotations(&adjudication, out_dir.join("adjudication.jsonl")).unwrap();
    std::fs::write(out_dir.join("assignments.tsv"), &assignment_text).unwrap();

    // self-check against the layout
    let assignments = Assignments::parse(&assignment_text).unwrap();
    let merged = annotate::merge_reviews(&reviews, &assignments, &spans, &adjudication).unwrap();
    for (m, layout) in merged.iter().zip(&layouts) {
        assert!(m.is_complete());
        assert_eq!(m.gold.labels, layout.labels, "{}", m.gold.review_id);
    }
    let mut sentence_counts = [0usize; 3];
    for (m, review) in merged.iter().zip(&reviews) {
        let projected = annotate::project_to_sentences(&m.gold, review).unwrap();
        for l in projected.labels {
            sentence_counts[Label::ALL.iter().position(|&x| x == l).unwrap()] += 1;
        }
    }
    assert_eq!(
        sentence_counts,
        [PRO_SENTENCES, CON_SENTENCES, NON_SENTENCES]
    );
    println!(
        "wrote {} reviews, {} spans, {} adjudication spans to {}",
        reviews.len(),
        spans.len(),
        adjudication.len(),
        out_dir.display()
    );
}

/// Start and length of the longest PRO/CON run.
fn longest_run(labels: &[Label]) -> Option<(usize, usize)> {
    extract_segments(labels)
        .into_iter()
        .map(|s| (s.start, s.len()))
        .max_by_key(|&(start, len)| (len, std::cmp::Reverse(start)))
}

fn opposite(label: Label) -> Label {
    match label {
        Label::Pro => Label::Con,
        _ => Label::Pro,
    }
}

/// One annotator's deviation inside one sentence.
fn perturb(rng: &mut ChaCha8Rng, sentence: &mut [Label]) {
    let segments = extract_segments(sentence);
    let Some(seg) = segments.choose(rng) else {
        let len = rng.gen_range(2..=sentence.len().min(4));
        let start = rng.gen_range(0..=sentence.len() - len);
        let label = if rng.gen_bool(0.5) {
            Label::Pro
        } else {
            Label::Con
        };
        sentence[start..start + len].fill(label);
        return;
    };
    match rng.gen_range(0..4) {
        0 => sentence[seg.start..seg.stop].fill(opposite(seg.label)),
        1 => sentence[seg.start..seg.stop].fill(Label::Non),
        2 if seg.len() > 3 => {
            let k = rng.gen_range(1..=2);
            if rng.gen_bool(0.5) {
                sentence[seg.start..seg.start + k].fill(Label::Non);
            } else {
                sentence[seg.stop - k..seg.stop].fill(Label::Non);
            }
        }
        _ => {
            let before = seg.start.min(2);
            let non_before = sentence[seg.start - before..seg.start]
                .iter()
                .all(|&l| l == Label::Non);
            if before > 0 && non_before {
                sentence[seg.start - before..seg.start].fill(seg.label);
            } else {
                let after = (sentence.len() - seg.stop).min(2);
                sentence[seg.stop..seg.stop + after].fill(seg.label);
            }
        }
    }
}

fn to_spans(labels: &[Label], review_id: &str, annotator_id: &str) -> Vec<SpanAnnotation> {
    extract_segments(labels)
        .into_iter()
        .map(|s| SpanAnnotation {
            annotator_id: annotator_id.to_string(),
            review_id: review_id.to_string(),
            start: s.start,
            stop: s.stop,
            label: s.label,
        })
        .collect()
}
