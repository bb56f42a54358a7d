#![allow(dead_code)]

use std::path::PathBuf;

use revarg::corpus::{self, Label, Review, SpanAnnotation, TokenSpan};

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(path)
}

pub struct Table2 {
    pub reviews: Vec<Review>,
    pub spans: Vec<SpanAnnotation>,
    pub adjudication: Vec<SpanAnnotation>,
    pub assignments: revarg::annotate::Assignments,
}

pub fn load_table2() -> Table2 {
    Table2 {
        reviews: corpus::read_reviews(fixture("table2/reviews.jsonl")).unwrap(),
        spans: corpus::read_annotations(fixture("table2/annotations.jsonl")).unwrap(),
        adjudication: corpus::read_annotations(fixture("table2/adjudication.jsonl")).unwrap(),
        assignments: revarg::annotate::Assignments::load(fixture("table2/assignments.tsv"))
            .unwrap(),
    }
}

/// A review whose sentences have the given token lengths.
pub fn review_with_sentences(id: &str, lengths: &[usize]) -> Review {
    let mut bounds = Vec::new();
    let mut start = 0;
    for &len in lengths {
        bounds.push(TokenSpan::new(start, start + len));
        start += len;
    }
    Review {
        review_id: id.into(),
        paper_id: format!("paper-{id}"),
        conference: "conf".into(),
        rating: Some(2),
        decision: Some(revarg::Decision::Reject),
        tokens: (0..start).map(|i| format!("w{i}")).collect(),
        sentence_bounds: bounds,
    }
}

pub const LABELS: [Label; 3] = [Label::Pro, Label::Con, Label::Non];

/// Every label sequence of length `n`, in lexicographic order over
/// `LABELS`.
pub fn all_sequences(n: usize) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                LABELS.iter().map(move |&l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Nominal alpha straight from the textbook definition: build the full
/// coincidence matrix over a fixed label alphabet, then 1 - D_o / D_e.
pub fn alpha_oracle(units: &[Vec<usize>], n_labels: usize) -> f64 {
    let mut o = vec![vec![0.0f64; n_labels]; n_labels];
    for unit in units {
        let m = unit.len();
        if m < 2 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    o[unit[i]][unit[j]] += 1.0 / (m as f64 - 1.0);
                }
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..n_labels {
        for k in 0..n_labels {
            if c != k {
                d_o += o[c][k];
                d_e += n_c[c] * n_c[k];
            }
        }
    }
    1.0 - (d_o / n) / (d_e / (n * (n - 1.0)))
}

/// Maximal PRO/CON runs as (start, stop, label), found by chunking equal
/// neighbours.
pub fn runs(labels: &[Label]) -> Vec<(usize, usize, Label)> {
    let mut out = Vec::new();
    let mut at = 0;
    for chunk in labels.chunk_by(|a, b| a == b) {
        if chunk[0] != Label::Non {
            out.push((at, at + chunk.len(), chunk[0]));
        }
        at += chunk.len();
    }
    out
}

/// Sentence label written out rule by rule.
pub fn projection_oracle(labels: &[Label], start: usize, stop: usize) -> Label {
    let inside = &labels[start..stop];
    if inside.iter().all(|&l| l == Label::Non) {
        return Label::Non;
    }
    let hits: Vec<_> = runs(labels)
        .into_iter()
        .filter(|&(s, e, _)| s < stop && e > start)
        .collect();
    let pro_runs = hits.iter().filter(|h| h.2 == Label::Pro).count();
    let con_runs = hits.len() - pro_runs;
    if pro_runs > con_runs {
        return Label::Pro;
    }
    if con_runs > pro_runs {
        return Label::Con;
    }
    let pro_tokens = inside.iter().filter(|&&l| l == Label::Pro).count();
    let con_tokens = inside.iter().filter(|&&l| l == Label::Con).count();
    if pro_tokens > con_tokens {
        Label::Pro
    } else if con_tokens > pro_tokens {
        Label::Con
    } else {
        hits.iter().min_by_key(|h| h.0).unwrap().2
    }
}

/// Every way to cut `n` tokens into consecutive nonempty sentences.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    (1..=n)
        .flat_map(|first| {
            compositions(n - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Adaptive Simpson on [a, b].
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = rule(fa, flm, fm, a, m);
        let right = rule(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, rule(fa, fm, fb, a, b), tol, 50)
}

/// Two-sided p of Student's t with `dof` degrees of freedom: the tail mass
/// beyond |t| over the half-line mass, both integrated numerically from the
/// unnormalized density after mapping [0, inf) to [0, 1).
pub fn t_two_sided_oracle(t: f64, dof: f64) -> f64 {
    let density = |x: f64| (1.0 + x * x / dof).powf(-(dof + 1.0) / 2.0);
    let from = |lo: f64| {
        let g = move |s: f64| {
            if s >= 1.0 {
                return 0.0;
            }
            let x = lo + s / (1.0 - s);
            density(x) / ((1.0 - s) * (1.0 - s))
        };
        simpson(&g, 0.0, 1.0, 1e-14)
    };
    from(t.abs()) / from(0.0)
}

pub fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
    };
    let (qa, qb) = (var(a) / a.len() as f64, var(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (qa + qb).sqrt();
    let dof =
        (qa + qb).powi(2) / (qa * qa / (a.len() as f64 - 1.0) + qb * qb / (b.len() as f64 - 1.0));
    (t, dof, t_two_sided_oracle(t, dof))
}
