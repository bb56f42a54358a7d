//! Readers and writers for the on-disk formats.
//!
//! * reviews / annotations: one JSON object per line.
//! * token labelings: `# review_id=<id> provenance=<p>` header, then
//!   `token<TAB>label` lines with a blank line between sentences.
//! * sentence labelings: same header, then `sentence text<TAB>label` lines,
//!   blank line between reviews.
//! * probabilities: `review_id<TAB>sentence_index<TAB>p_arg`.
//!
//! Readers reject every invariant violation; nothing is repaired.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{
    check_no_overlap, identifier_problem, Decision, Label, ProbabilityRecord, Provenance,
    RawReview, Review, SentenceLabeling, SpanAnnotation, TokenLabeling, TokenSpan,
};
use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Nonblank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line))
        .filter(|(_, line)| !line.trim().is_empty())
}

struct JsonRecord<'a> {
    path: &'a Path,
    line: usize,
    map: Map<String, Value>,
}

impl<'a> JsonRecord<'a> {
    fn parse(path: &'a Path, line: usize, text: &str) -> Result<Self> {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => Ok(JsonRecord { path, line, map }),
            Ok(_) => Err(Error::parse(
                path,
                line,
                "<record>",
                "expected a JSON object",
            )),
            Err(e) => Err(Error::parse(path, line, "<record>", e.to_string())),
        }
    }

    fn err(&self, field: &str, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, field, message)
    }

    fn get(&self, field: &str) -> Result<&Value> {
        self.map
            .get(field)
            .ok_or_else(|| self.err(field, "missing field"))
    }

    fn string(&self, field: &str) -> Result<String> {
        let s = self
            .get(field)?
            .as_str()
            .ok_or_else(|| self.err(field, "expected a string"))?;
        if let Some(problem) = identifier_problem(field, s) {
            return Err(self.err(field, problem));
        }
        Ok(s.to_string())
    }

    fn index(&self, field: &str) -> Result<usize> {
        self.get(field)?
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| self.err(field, "expected a non-negative integer"))
    }

    /// Absent and `null` both mean "not available".
    fn optional(&self, field: &str) -> Option<&Value> {
        self.map.get(field).filter(|v| !v.is_null())
    }

    fn rating(&self) -> Result<Option<u8>> {
        match self.optional("rating") {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(r @ 1..=4) => Ok(Some(r as u8)),
                _ => Err(self.err("rating", format!("expected an integer in 1..4, got {v}"))),
            },
        }
    }

    fn decision(&self) -> Result<Option<Decision>> {
        match self.optional("decision") {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .ok_or_else(|| self.err("decision", "expected a string"))?
                .parse()
                .map(Some)
                .map_err(|e: String| self.err("decision", e)),
        }
    }

    fn tokens(&self) -> Result<Vec<String>> {
        let items = self
            .get("tokens")?
            .as_array()
            .ok_or_else(|| self.err("tokens", "expected an array of strings"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| self.err("tokens", format!("element {i} is not a string")))
            })
            .collect()
    }

    fn bounds(&self) -> Result<Vec<TokenSpan>> {
        let items = self.get("sentence_bounds")?.as_array().ok_or_else(|| {
            self.err(
                "sentence_bounds",
                "expected an array of [start, stop] pairs",
            )
        })?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let pair = v.as_array().filter(|a| a.len() == 2).and_then(|a| {
                    Some(TokenSpan::new(
                        a[0].as_u64()? as usize,
                        a[1].as_u64()? as usize,
                    ))
                });
                pair.ok_or_else(|| {
                    self.err(
                        "sentence_bounds",
                        format!("element {i} is not a [start, stop] pair of integers"),
                    )
                })
            })
            .collect()
    }
}

pub fn read_reviews(path: impl AsRef<Path>) -> Result<Vec<Review>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut seen = HashSet::new();
    let mut reviews = Vec::new();
    for (line, content) in content_lines(&text) {
        let rec = JsonRecord::parse(path, line, content)?;
        let review = Review {
            review_id: rec.string("review_id")?,
            paper_id: rec.string("paper_id")?,
            conference: rec.string("conference")?,
            rating: rec.rating()?,
            decision: rec.decision()?,
            tokens: rec.tokens()?,
            sentence_bounds: rec.bounds()?,
        };
        if let Some((field, message)) = review.violation() {
            return Err(rec.err(field, message));
        }
        if !seen.insert(review.review_id.clone()) {
            return Err(rec.err(
                "review_id",
                format!("duplicate review id `{}`", review.review_id),
            ));
        }
        reviews.push(review);
    }
    Ok(reviews)
}

/// Reads raw review records: the review metadata plus a `text` field.
pub fn read_raw_reviews(path: impl AsRef<Path>) -> Result<Vec<RawReview>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut seen = HashSet::new();
    let mut raws = Vec::new();
    for (line, content) in content_lines(&text) {
        let rec = JsonRecord::parse(path, line, content)?;
        let raw = RawReview {
            review_id: rec.string("review_id")?,
            paper_id: rec.string("paper_id")?,
            conference: rec.string("conference")?,
            rating: rec.rating()?,
            decision: rec.decision()?,
            text: rec
                .get("text")?
                .as_str()
                .ok_or_else(|| rec.err("text", "expected a string"))?
                .to_string(),
        };
        if !seen.insert(raw.review_id.clone()) {
            return Err(rec.err(
                "review_id",
                format!("duplicate review id `{}`", raw.review_id),
            ));
        }
        raws.push(raw);
    }
    Ok(raws)
}

pub(crate) fn json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item)
            .map_err(|e| Error::Validation(format!("cannot serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_reviews(reviews: &[Review], path: impl AsRef<Path>) -> Result<()> {
    for review in reviews {
        review.validate()?;
    }
    write_text(path.as_ref(), &json_lines(reviews)?)
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<SpanAnnotation>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut spans = Vec::new();
    for (line, content) in content_lines(&text) {
        let rec = JsonRecord::parse(path, line, content)?;
        let label: Label = rec
            .get("label")?
            .as_str()
            .ok_or_else(|| rec.err("label", "expected a string"))?
            .parse()
            .map_err(|e: String| rec.err("label", e))?;
        let span = SpanAnnotation {
            annotator_id: rec.string("annotator_id")?,
            review_id: rec.string("review_id")?,
            start: rec.index("start")?,
            stop: rec.index("stop")?,
            label,
        };
        if let Err(e) = span.validate() {
            let field = if span.label == Label::Non {
                "label"
            } else {
                "stop"
            };
            return Err(rec.err(field, e.to_string()));
        }
        spans.push(span);
    }
    check_no_overlap(&spans)?;
    Ok(spans)
}

pub fn write_annotations(spans: &[SpanAnnotation], path: impl AsRef<Path>) -> Result<()> {
    for span in spans {
        span.validate()?;
    }
    check_no_overlap(spans)?;
    write_text(path.as_ref(), &json_lines(spans)?)
}

pub fn read_probabilities(path: impl AsRef<Path>) -> Result<Vec<ProbabilityRecord>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, content) in content_lines(&text) {
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                line,
                "<record>",
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let sentence_index = fields[1]
            .parse::<usize>()
            .map_err(|e| Error::parse(path, line, "sentence_index", e.to_string()))?;
        let p_arg = fields[2]
            .parse::<f64>()
            .map_err(|e| Error::parse(path, line, "p_arg", e.to_string()))?;
        let record = ProbabilityRecord {
            review_id: fields[0].to_string(),
            sentence_index,
            p_arg,
        };
        if let Some(problem) = identifier_problem("review_id", &record.review_id) {
            return Err(Error::parse(path, line, "review_id", problem));
        }
        if let Err(e) = record.validate() {
            return Err(Error::parse(path, line, "p_arg", e.to_string()));
        }
        if !seen.insert((record.review_id.clone(), sentence_index)) {
            return Err(Error::parse(
                path,
                line,
                "sentence_index",
                format!(
                    "duplicate probability for sentence {sentence_index} of review `{}`",
                    record.review_id
                ),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_probabilities(records: &[ProbabilityRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for rec in records {
        rec.validate()?;
        writeln!(
            out,
            "{}\t{}\t{}",
            rec.review_id, rec.sentence_index, rec.p_arg
        )
        .unwrap();
    }
    write_text(path.as_ref(), &out)
}

/// A token labeling together with the tokens and sentence grouping it was
/// stored with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDocument {
    pub labeling: TokenLabeling,
    pub tokens: Vec<String>,
    pub sentence_bounds: Vec<TokenSpan>,
}

impl TokenDocument {
    /// Checks that the stored tokens and sentence grouping match `review`.
    pub fn check_against(&self, review: &Review) -> Result<()> {
        self.labeling.check_against(review)?;
        if self.tokens != review.tokens || self.sentence_bounds != review.sentence_bounds {
            return Err(Error::Validation(format!(
                "token file content for review `{}` does not match the review's tokens or sentences",
                review.review_id
            )));
        }
        Ok(())
    }
}

/// A sentence labeling together with the sentence texts it was stored with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceDocument {
    pub labeling: SentenceLabeling,
    pub sentences: Vec<String>,
}

fn header(review_id: &str, provenance: &Provenance) -> String {
    format!("# review_id={review_id} provenance={provenance}\n")
}

fn format_token_labeling(
    out: &mut String,
    labeling: &TokenLabeling,
    review: &Review,
) -> Result<()> {
    if labeling.review_id != review.review_id {
        return Err(Error::Validation(format!(
            "labeling for review `{}` paired with review `{}`",
            labeling.review_id, review.review_id
        )));
    }
    labeling.check_against(review)?;
    out.push_str(&header(&labeling.review_id, &labeling.provenance));
    for (i, bounds) in review.sentence_bounds.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for idx in bounds.range() {
            writeln!(out, "{}\t{}", review.tokens[idx], labeling.labels[idx]).unwrap();
        }
    }
    Ok(())
}

pub fn write_token_labeling(
    labeling: &TokenLabeling,
    review: &Review,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_token_labelings(&[(labeling, review)], path)
}

/// Writes several reviews into one file, separated by a blank line.
pub fn write_token_labelings(
    items: &[(&TokenLabeling, &Review)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    for (i, (labeling, review)) in items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        format_token_labeling(&mut out, labeling, review)?;
    }
    write_text(path.as_ref(), &out)
}

/// Unit lines always carry a tab, so a token or sentence that happens to
/// start with `#` is not mistaken for a header.
fn is_header(content: &str) -> bool {
    content.starts_with('#') && !content.contains('\t')
}

fn parse_header(path: &Path, line: usize, content: &str) -> Result<(String, Provenance)> {
    let mut review_id = None;
    let mut provenance = Provenance::Gold;
    for item in content[1..].split_whitespace() {
        match item.split_once('=') {
            Some(("review_id", id)) => {
                if let Some(problem) = identifier_problem("review_id", id) {
                    return Err(Error::parse(path, line, "review_id", problem));
                }
                review_id = Some(id.to_string());
            }
            Some(("provenance", p)) => {
                provenance = p
                    .parse()
                    .map_err(|e: String| Error::parse(path, line, "provenance", e))?;
            }
            _ => {
                return Err(Error::parse(
                    path,
                    line,
                    "<header>",
                    format!("unexpected header item `{item}`"),
                ))
            }
        }
    }
    let review_id =
        review_id.ok_or_else(|| Error::parse(path, line, "review_id", "missing in header"))?;
    Ok((review_id, provenance))
}

fn parse_unit_line<'t>(
    path: &Path,
    line: usize,
    content: &'t str,
    unit: &str,
) -> Result<(&'t str, Label)> {
    let fields: Vec<&str> = content.split('\t').collect();
    if fields.len() != 2 {
        return Err(Error::parse(
            path,
            line,
            "<record>",
            format!(
                "expected `{unit}<TAB>label`, found {} field(s)",
                fields.len()
            ),
        ));
    }
    let label = fields[1]
        .parse()
        .map_err(|e: String| Error::parse(path, line, "label", e))?;
    Ok((fields[0], label))
}

pub fn read_token_labelings(path: impl AsRef<Path>) -> Result<Vec<TokenDocument>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut docs: Vec<TokenDocument> = Vec::new();
    let mut seen = HashSet::new();
    let mut sentence_start = 0;

    fn close_sentence(doc: &mut TokenDocument, sentence_start: &mut usize) {
        let n = doc.tokens.len();
        if n > *sentence_start {
            doc.sentence_bounds.push(TokenSpan::new(*sentence_start, n));
            *sentence_start = n;
        }
    }

    for (i, content) in text.lines().enumerate() {
        let line = i + 1;
        if is_header(content) {
            if let Some(doc) = docs.last_mut() {
                close_sentence(doc, &mut sentence_start);
            }
            let (review_id, provenance) = parse_header(path, line, content)?;
            if !seen.insert(review_id.clone()) {
                return Err(Error::parse(
                    path,
                    line,
                    "review_id",
                    format!("duplicate review id `{review_id}`"),
                ));
            }
            docs.push(TokenDocument {
                labeling: TokenLabeling {
                    review_id,
                    labels: Vec::new(),
                    provenance,
                },
                tokens: Vec::new(),
                sentence_bounds: Vec::new(),
            });
            sentence_start = 0;
        } else if content.trim().is_empty() {
            if let Some(doc) = docs.last_mut() {
                close_sentence(doc, &mut sentence_start);
            }
        } else {
            let doc = docs.last_mut().ok_or_else(|| {
                Error::parse(
                    path,
                    line,
                    "<header>",
                    "token line before any `# review_id=` header",
                )
            })?;
            let (token, label) = parse_unit_line(path, line, content, "token")?;
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::parse(
                    path,
                    line,
                    "token",
                    "token is empty or contains whitespace",
                ));
            }
            doc.tokens.push(token.to_string());
            doc.labeling.labels.push(label);
        }
    }
    if let Some(doc) = docs.last_mut() {
        close_sentence(doc, &mut sentence_start);
    }
    Ok(docs)
}

/// Writes sentence labelings, one block per review.
pub fn write_sentence_labelings(
    items: &[(&SentenceLabeling, &Review)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    for (i, (labeling, review)) in items.iter().enumerate() {
        if labeling.review_id != review.review_id {
            return Err(Error::Validation(format!(
                "labeling for review `{}` paired with review `{}`",
                labeling.review_id, review.review_id
            )));
        }
        labeling.check_against(review)?;
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&header(&labeling.review_id, &labeling.provenance));
        for (s, label) in labeling.labels.iter().enumerate() {
            writeln!(out, "{}\t{}", review.sentence_text(s), label).unwrap();
        }
    }
    write_text(path.as_ref(), &out)
}

pub fn read_sentence_labelings(path: impl AsRef<Path>) -> Result<Vec<SentenceDocument>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut docs: Vec<SentenceDocument> = Vec::new();
    let mut seen = HashSet::new();
    for (i, content) in text.lines().enumerate() {
        let line = i + 1;
        if is_header(content) {
            let (review_id, provenance) = parse_header(path, line, content)?;
            if !seen.insert(review_id.clone()) {
                return Err(Error::parse(
                    path,
                    line,
                    "review_id",
                    format!("duplicate review id `{review_id}`"),
                ));
            }
            docs.push(SentenceDocument {
                labeling: SentenceLabeling {
                    review_id,
                    labels: Vec::new(),
                    provenance,
                },
                sentences: Vec::new(),
            });
        } else if !content.trim().is_empty() {
            let doc = docs.last_mut().ok_or_else(|| {
                Error::parse(
                    path,
                    line,
                    "<header>",
                    "sentence line before any `# review_id=` header",
                )
            })?;
            let (sentence, label) = parse_unit_line(path, line, content, "sentence")?;
            if sentence.trim().is_empty() {
                return Err(Error::parse(path, line, "sentence", "empty sentence text"));
            }
            doc.sentences.push(sentence.to_string());
            doc.labeling.labels.push(label);
        }
    }
    Ok(docs)
}
