use proptest::prelude::*;
use revarg::corpus::{
    read_annotations, read_probabilities, read_reviews, read_sentence_labelings,
    read_token_labelings, write_annotations, write_probabilities, write_reviews,
    write_sentence_labelings, write_token_labelings, Label, ProbabilityRecord, Provenance, Review,
    SentenceLabeling, SpanAnnotation, TokenLabeling, TokenSpan,
};
use revarg::Decision;

fn id() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,8}"
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z]{1,8}",
        "[!-~]{1,6}",
        "[\u{e0}-\u{ff}\u{4e00}-\u{4e10}]{1,4}",
        Just("<FORMULA>".to_string()),
        Just("#1".to_string()),
        Just("\"quoted\"".to_string()),
    ]
}

fn label() -> impl Strategy<Value = Label> {
    prop::sample::select(vec![Label::Pro, Label::Con, Label::Non])
}

fn review() -> impl Strategy<Value = Review> {
    (
        id(),
        id(),
        id(),
        prop::option::of(1u8..=4),
        prop::option::of(prop::sample::select(vec![
            Decision::Accept,
            Decision::Reject,
        ])),
        prop::collection::vec(1usize..6, 1..6),
    )
        .prop_flat_map(
            |(review_id, paper_id, conference, rating, decision, lengths)| {
                let total: usize = lengths.iter().sum();
                (
                    Just((review_id, paper_id, conference, rating, decision, lengths)),
                    prop::collection::vec(token(), total),
                )
            },
        )
        .prop_map(
            |((review_id, paper_id, conference, rating, decision, lengths), tokens)| {
                let mut bounds = Vec::new();
                let mut at = 0;
                for len in lengths {
                    bounds.push(TokenSpan::new(at, at + len));
                    at += len;
                }
                Review {
                    review_id,
                    paper_id,
                    conference,
                    rating,
                    decision,
                    tokens,
                    sentence_bounds: bounds,
                }
            },
        )
}

/// Reviews with distinct ids.
fn reviews() -> impl Strategy<Value = Vec<Review>> {
    prop::collection::vec(review(), 1..5).prop_map(|mut rs| {
        for (i, r) in rs.iter_mut().enumerate() {
            r.review_id = format!("{}-{i}", r.review_id);
        }
        rs
    })
}

fn provenance() -> impl Strategy<Value = Provenance> {
    prop_oneof![
        Just(Provenance::Gold),
        Just(Provenance::Predicted),
        id().prop_map(Provenance::Annotator),
    ]
}

proptest! {
    #[test]
    fn reviews_round_trip(rs in reviews()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_reviews(&rs, &path).unwrap();
        prop_assert_eq!(read_reviews(&path).unwrap(), rs);
    }

    #[test]
    fn annotations_round_trip(
        items in prop::collection::vec((id(), id(), 0usize..50, 1usize..10, label()), 0..20),
    ) {
        let spans: Vec<SpanAnnotation> = items
            .into_iter()
            .enumerate()
            .filter(|(_, it)| it.4 != Label::Non)
            .map(|(i, (a, r, start, len, label))| SpanAnnotation {
                annotator_id: a,
                // one span per review keeps spans from overlapping
                review_id: format!("{r}{i}"),
                start,
                stop: start + len,
                label,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        write_annotations(&spans, &path).unwrap();
        prop_assert_eq!(read_annotations(&path).unwrap(), spans);
    }

    #[test]
    fn probabilities_round_trip(items in prop::collection::vec((id(), 0usize..30, 0.0f64..=1.0), 0..20)) {
        let records: Vec<ProbabilityRecord> = items
            .into_iter()
            .enumerate()
            .map(|(i, (r, s, p_arg))| ProbabilityRecord { review_id: r, sentence_index: s * 100 + i, p_arg })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        write_probabilities(&records, &path).unwrap();
        prop_assert_eq!(read_probabilities(&path).unwrap(), records);
    }

    #[test]
    fn token_labelings_round_trip(
        (rs, labels, prov) in reviews().prop_flat_map(|rs| {
            let labels: Vec<_> = rs.iter().map(|r| prop::collection::vec(label(), r.n_tokens())).collect();
            (Just(rs), labels, provenance())
        }),
    ) {
        let labelings: Vec<TokenLabeling> = rs
            .iter()
            .zip(labels)
            .map(|(r, l)| TokenLabeling { review_id: r.review_id.clone(), labels: l, provenance: prov.clone() })
            .collect();
        let items: Vec<(&TokenLabeling, &Review)> = labelings.iter().zip(&rs).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.conll");
        write_token_labelings(&items, &path).unwrap();
        let docs = read_token_labelings(&path).unwrap();
        prop_assert_eq!(docs.len(), rs.len());
        for ((doc, labeling), r) in docs.iter().zip(&labelings).zip(&rs) {
            prop_assert_eq!(&doc.labeling, labeling);
            prop_assert!(doc.check_against(r).is_ok());
        }
    }

    #[test]
    fn sentence_labelings_round_trip(
        (rs, labels, prov) in reviews().prop_flat_map(|rs| {
            let labels: Vec<_> = rs.iter().map(|r| prop::collection::vec(label(), r.n_sentences())).collect();
            (Just(rs), labels, provenance())
        }),
    ) {
        let labelings: Vec<SentenceLabeling> = rs
            .iter()
            .zip(labels)
            .map(|(r, l)| SentenceLabeling { review_id: r.review_id.clone(), labels: l, provenance: prov.clone() })
            .collect();
        let items: Vec<(&SentenceLabeling, &Review)> = labelings.iter().zip(&rs).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        write_sentence_labelings(&items, &path).unwrap();
        let docs = read_sentence_labelings(&path).unwrap();
        prop_assert_eq!(docs.len(), rs.len());
        for ((doc, labeling), r) in docs.iter().zip(&labelings).zip(&rs) {
            prop_assert_eq!(&doc.labeling, labeling);
            let texts: Vec<String> = (0..r.n_sentences()).map(|s| r.sentence_text(s)).collect();
            prop_assert_eq!(&doc.sentences, &texts);
        }
    }
}
