//! Raw review text to tokenized, sentence-segmented [`Review`]s.
//!
//! The pipeline is: placeholder normalization, rule-based sentence
//! splitting with protected abbreviations, whitespace tokenization and a
//! minimum-length filter.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;

use crate::corpus::{RawReview, Review, TokenSpan};
use crate::error::{Error, Result};

const DEFAULT_RULES: &str = include_str!("../config/default_rules.cfg");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../config/default_abbreviations.txt");

/// Abbreviations that every [`AbbreviationSet`] contains.
pub const REQUIRED_ABBREVIATIONS: [&str; 4] = ["e.g.", "i.e.", "et al.", "Fig."];

pub const DEFAULT_MIN_TOKENS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceholderKind {
    Url,
    Formula,
    Escape,
    Unicode,
    Markdown,
}

impl PlaceholderKind {
    /// Application order.
    pub const ORDER: [PlaceholderKind; 5] = [
        PlaceholderKind::Url,
        PlaceholderKind::Formula,
        PlaceholderKind::Escape,
        PlaceholderKind::Unicode,
        PlaceholderKind::Markdown,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PlaceholderKind::Url => "<URL>",
            PlaceholderKind::Formula => "<FORMULA>",
            PlaceholderKind::Escape => "<ESC>",
            PlaceholderKind::Unicode => "<UNICODE>",
            PlaceholderKind::Markdown => "<MARKDOWN>",
        }
    }

    fn name(self) -> &'static str {
        match self {
            PlaceholderKind::Url => "URL",
            PlaceholderKind::Formula => "FORMULA",
            PlaceholderKind::Escape => "ESCAPE",
            PlaceholderKind::Unicode => "UNICODE",
            PlaceholderKind::Markdown => "MARKDOWN",
        }
    }
}

impl fmt::Display for PlaceholderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlaceholderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ORDER
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown placeholder kind `{s}`"))
    }
}

/// A pattern whose matches are replaced by the placeholder token of its kind.
#[derive(Debug, Clone)]
pub struct PlaceholderRule {
    pub kind: PlaceholderKind,
    pub pattern: Regex,
}

impl PlaceholderRule {
    pub fn new(kind: PlaceholderKind, pattern: &str) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::InvalidArgument(format!("bad {kind} pattern: {e}")))?;
        Ok(PlaceholderRule { kind, pattern })
    }

    pub fn token(&self) -> &'static str {
        self.kind.token()
    }
}

/// Parses a rule table: one `KIND<whitespace>regex` per line, `#` comments.
/// The result is ordered by kind, keeping file order within a kind.
pub fn parse_rules(text: &str) -> Result<Vec<PlaceholderRule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (kind, pattern) = line
            .split_once(|c: char| c.is_whitespace())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("rule line {}: expected `KIND pattern`", i + 1))
            })?;
        let kind: PlaceholderKind = kind
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("rule line {}: {e}", i + 1)))?;
        rules.push(PlaceholderRule::new(kind, pattern.trim_start())?);
    }
    rules.sort_by_key(|r| r.kind);
    Ok(rules)
}

pub fn default_rules() -> Vec<PlaceholderRule> {
    parse_rules(DEFAULT_RULES).expect("built-in rule table is valid")
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<PlaceholderRule>> {
    let path = path.as_ref();
    parse_rules(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn apply_rules_once(text: &str, rules: &[PlaceholderRule]) -> String {
    let mut out = text.to_string();
    for rule in rules {
        let replacement = format!(" {} ", rule.token());
        if let std::borrow::Cow::Owned(replaced) = rule
            .pattern
            .replace_all(&out, regex::NoExpand(&replacement))
        {
            out = replaced;
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Replaces every rule match with its placeholder token and collapses runs
/// of whitespace into single spaces.
///
/// Placeholders are padded with spaces so they always form a token of their
/// own. Passes repeat until nothing changes, so the result is a fixpoint and
/// `normalize(normalize(x)) == normalize(x)`.
pub fn normalize(text: &str, rules: &[PlaceholderRule]) -> String {
    let mut current = apply_rules_once(text, rules);
    loop {
        let next = apply_rules_once(&current, rules);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Strings after which a sentence never ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationSet {
    entries: Vec<Vec<String>>,
}

impl AbbreviationSet {
    /// Builds a set from entries; the required abbreviations are always added.
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = AbbreviationSet {
            entries: Vec::new(),
        };
        for entry in REQUIRED_ABBREVIATIONS
            .iter()
            .map(|s| s.to_string())
            .chain(entries.into_iter().map(|s| s.as_ref().to_string()))
        {
            let words: Vec<String> = entry.split_whitespace().map(str::to_string).collect();
            if !words.is_empty() && !set.entries.contains(&words) {
                set.entries.push(words);
            }
        }
        set
    }

    /// Parses one abbreviation per line, `#` comments.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Self::parse(
            &fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        ))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, abbreviation: &str) -> bool {
        let words: Vec<&str> = abbreviation.split_whitespace().collect();
        self.entries.iter().any(|e| e.iter().eq(words.iter()))
    }

    /// True if the tokens ending at `end` (inclusive) spell an abbreviation.
    fn protects(&self, tokens: &[&str], end: usize) -> bool {
        self.entries.iter().any(|words| {
            let m = words.len();
            if end + 1 < m {
                return false;
            }
            let first = end + 1 - m;
            words.iter().enumerate().all(|(j, word)| {
                let mut token = tokens[first + j];
                if j == 0 {
                    token = token.trim_start_matches(OPENERS);
                }
                if j + 1 == m {
                    token = token.trim_end_matches(CLOSERS);
                }
                token == word
            })
        })
    }
}

impl Default for AbbreviationSet {
    fn default() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }
}

const OPENERS: &[char] = &['(', '[', '{', '"', '\'', '\u{201c}', '\u{2018}'];
const CLOSERS: &[char] = &[')', ']', '}', '"', '\'', '\u{201d}', '\u{2019}'];
const TERMINATORS: &[char] = &['.', '!', '?'];

fn ends_sentence(token: &str) -> Option<char> {
    token
        .trim_end_matches(CLOSERS)
        .chars()
        .last()
        .filter(|c| TERMINATORS.contains(c))
}

/// Splits normalized text into sentences.
///
/// A sentence ends after a token whose last character (ignoring closing
/// quotes and brackets) is `.`, `!` or `?`, unless the token completes a
/// protected abbreviation, or it ends in `.` and the next token starts with
/// a lowercase letter.
pub fn split_sentences(text: &str, abbrevs: &AbbreviationSet) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    for i in 0..tokens.len() {
        let is_last = i + 1 == tokens.len();
        let boundary = is_last
            || match ends_sentence(tokens[i]) {
                None => false,
                Some(term) => {
                    // a bracketed opener such as "(ii)" starts a new sentence
                    let continues_lowercase =
                        term == '.' && tokens[i + 1].chars().next().is_some_and(char::is_lowercase);
                    !continues_lowercase && !abbrevs.protects(&tokens, i)
                }
            };
        if boundary {
            sentences.push(tokens[start..=i].join(" "));
            start = i + 1;
        }
    }
    sentences
}

/// Tokens and sentence bounds of a review, before metadata is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewBody {
    pub tokens: Vec<String>,
    pub sentence_bounds: Vec<TokenSpan>,
}

/// Whitespace-tokenizes each sentence and drops those with fewer than
/// `min_tokens` tokens.
pub fn filter_and_tokenize<S: AsRef<str>>(
    sentences: &[S],
    min_tokens: usize,
) -> Result<ReviewBody> {
    if min_tokens == 0 {
        return Err(Error::InvalidArgument(
            "min_tokens must be at least 1".into(),
        ));
    }
    let mut body = ReviewBody {
        tokens: Vec::new(),
        sentence_bounds: Vec::new(),
    };
    for sentence in sentences {
        let words: Vec<&str> = sentence.as_ref().split_whitespace().collect();
        if words.len() < min_tokens {
            continue;
        }
        let start = body.tokens.len();
        body.tokens.extend(words.into_iter().map(str::to_string));
        body.sentence_bounds
            .push(TokenSpan::new(start, body.tokens.len()));
    }
    if body.sentence_bounds.is_empty() {
        return Err(Error::EmptyReview(String::new()));
    }
    Ok(body)
}

/// Reviews or individual sentences removed by hand.
///
/// File format: one entry per line, either `review_id` (drop the review) or
/// `review_id<TAB>sentence_index` (drop one sentence, indexed after
/// splitting and before the length filter).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionList {
    reviews: HashSet<String>,
    sentences: HashSet<(String, usize)>,
}

impl ExclusionList {
    pub fn parse(text: &str) -> Result<Self> {
        let mut list = ExclusionList::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                None => {
                    list.reviews.insert(line.to_string());
                }
                Some((id, idx)) => {
                    let idx = idx.trim().parse::<usize>().map_err(|e| {
                        Error::InvalidArgument(format!("exclusion line {}: {e}", i + 1))
                    })?;
                    list.sentences.insert((id.to_string(), idx));
                }
            }
        }
        Ok(list)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn excludes_review(&self, review_id: &str) -> bool {
        self.reviews.contains(review_id)
    }

    pub fn excludes_sentence(&self, review_id: &str, index: usize) -> bool {
        self.sentences.contains(&(review_id.to_string(), index))
    }
}

/// Everything needed to turn raw text into a [`Review`].
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub rules: Vec<PlaceholderRule>,
    pub abbreviations: AbbreviationSet,
    pub exclusions: ExclusionList,
    pub min_tokens: usize,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            rules: default_rules(),
            abbreviations: AbbreviationSet::default(),
            exclusions: ExclusionList::default(),
            min_tokens: DEFAULT_MIN_TOKENS,
        }
    }
}

impl Preprocessor {
    /// Returns `Ok(None)` for reviews on the exclusion list.
    pub fn process(&self, raw: &RawReview) -> Result<Option<Review>> {
        if self.exclusions.excludes_review(&raw.review_id) {
            return Ok(None);
        }
        let text = normalize(&raw.text, &self.rules);
        let sentences: Vec<String> = split_sentences(&text, &self.abbreviations)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !self.exclusions.excludes_sentence(&raw.review_id, *i))
            .map(|(_, s)| s)
            .collect();
        let body = filter_and_tokenize(&sentences, self.min_tokens).map_err(|e| match e {
            Error::EmptyReview(_) => Error::EmptyReview(raw.review_id.clone()),
            other => other,
        })?;
        let review = Review {
            review_id: raw.review_id.clone(),
            paper_id: raw.paper_id.clone(),
            conference: raw.conference.clone(),
            rating: raw.rating,
            decision: raw.decision,
            tokens: body.tokens,
            sentence_bounds: body.sentence_bounds,
        };
        review.validate()?;
        Ok(Some(review))
    }
}
