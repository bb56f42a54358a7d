//! The `revarg` command line.
//!
//! Data goes to the files named by `--out`/`--report` (or standard output
//! when a report path is omitted); diagnostics go to standard error. Exit
//! codes: 0 success, 1 validation or I/O failure, 2 usage error.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::agreement;
use crate::annotate::{self, Assignments};
use crate::corpus::{self, io as corpus_io, Label, Level, Review, Task, TaskLabel, TokenLabeling};
use crate::datasetops::{self, SplitSpec};
use crate::error::{Error, Result};
use crate::evaluate::{self, ConfusionMatrix};
use crate::preprocess::{self, AbbreviationSet, ExclusionList, Preprocessor};
use crate::select::{self, SelectionMode, SelectionSpec};

#[derive(Debug, Parser)]
#[command(
    name = "revarg",
    version,
    about = "Argument-mining corpus pipeline for peer reviews"
)]
struct Cli {
    /// Shared settings (TOML): rules, abbreviations, exclusions, seed,
    /// ratios, output_dir.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize, sentence-split and filter raw reviews.
    Preprocess(PreprocessArgs),
    /// Merge three annotators per review into token-level gold.
    Merge(MergeArgs),
    /// Project token-level labels to sentences.
    Project(ProjectArgs),
    /// Inter-annotator agreement and human performance.
    Agree(AgreeArgs),
    /// Draw a stratified sample of reviews for annotation.
    Sample(SampleArgs),
    /// Stratified train/validation/test split of sentences.
    Split(SplitArgs),
    /// Label distribution at token and sentence level.
    Stats(StatsArgs),
    /// Inverse-frequency class weights.
    Weights(WeightsArgs),
    /// Score predictions (or the majority baseline) against gold.
    Evaluate(EvaluateArgs),
    /// Mean and sample standard deviation of per-seed scores.
    Aggregate(AggregateArgs),
    /// Two-sided Welch t-test between two score files.
    Ttest(TtestArgs),
    /// Condense reviews to their most argumentative sentences.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    abbrev: Option<PathBuf>,
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long, default_value_t = preprocess::DEFAULT_MIN_TOKENS)]
    min_tokens: usize,
    /// Drop reviews left without sentences instead of failing.
    #[arg(long)]
    skip_empty: bool,
}

#[derive(Debug, Args)]
struct MergeArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    adjudication: Option<PathBuf>,
    /// `review_id<TAB>annotator_id` lines; inferred from the spans if absent.
    #[arg(long)]
    assignments: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Receives `review_id<TAB>token_index` for unresolved tokens.
    #[arg(long)]
    conflicts: Option<PathBuf>,
    /// Fail when conflicts remain.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    tokens: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AgreeArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Level at which human performance is scored.
    #[arg(long, value_enum, default_value_t = Level::Token)]
    level: Level,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Sentence-level gold file.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value_t = Task::Joint)]
    task: Task,
    /// Comma-separated train,val,test ratios.
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<[f64; 3]>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Token-level gold file.
    #[arg(long, required_unless_present = "sentences")]
    tokens: Option<PathBuf>,
    /// Sentence-level gold file.
    #[arg(long)]
    sentences: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Task::Joint)]
    task: Task,
    /// Write JSON instead of a tab-separated table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    /// Sentence-level gold file.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value_t = Task::Joint)]
    task: Task,
    /// Restrict counting to the train part of this split.
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(
        long,
        required_unless_present = "majority_baseline",
        conflicts_with = "majority_baseline"
    )]
    pred: Option<PathBuf>,
    /// Score the constant majority-class prediction instead of `--pred`.
    /// The class comes from the train part when `--splits` is given.
    #[arg(long)]
    majority_baseline: bool,
    #[arg(long, value_enum)]
    task: Task,
    #[arg(long, value_enum)]
    level: Level,
    /// Score only the sentences of one split part.
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Part::Test, requires = "splits")]
    part: Part,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TtestArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    reviews: PathBuf,
    /// `review_id<TAB>sentence_index<TAB>p_arg` lines; required for topk.
    #[arg(long, required_if_eq("mode", "topk"))]
    probs: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: SelectionMode,
    /// Percentage of sentences to keep per review.
    #[arg(long, required_if_eq_any([("mode", "topk"), ("mode", "randomk")]))]
    k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the kept sentence indices per review.
    #[arg(long)]
    selections: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Part {
    Train,
    Val,
    Test,
}

fn parse_ratios(text: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!(
            "expected three comma-separated ratios, got `{text}`"
        ));
    };
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| format!("bad ratio `{s}`: {e}"))
    };
    Ok([parse(a)?, parse(b)?, parse(c)?])
}

/// Shared settings loaded from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub rules: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ratios: Option<[f64; 3]>,
    /// Relative output paths are resolved against this directory.
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parses a config file. Relative paths are taken relative to the
    /// file's directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = corpus_io::read_text(path)?;
        let mut config: PipelineConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            field: "config".into(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (name, slot) in [
            ("rules", &mut config.rules),
            ("abbreviations", &mut config.abbreviations),
            ("exclusions", &mut config.exclusions),
            ("output_dir", &mut config.output_dir),
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.exists() {
                    return Err(Error::Validation(format!(
                        "config {}: {name} path {} does not exist",
                        path.display(),
                        p.display()
                    )));
                }
            }
        }
        if let Some(ratios) = config.ratios {
            SplitSpec {
                ratios,
                seed: 0,
                stratify_on: Task::Joint,
            }
            .validate()?;
        }
        Ok(config)
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

struct Context {
    config: PipelineConfig,
}

impl Context {
    fn output(&self, path: &Path) -> PathBuf {
        match &self.config.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn seed(&self, flag: Option<u64>) -> CliResult<u64> {
        flag.or(self.config.seed).ok_or_else(|| {
            Failure::Usage("--seed is required (or set `seed` in the config file)".into())
        })
    }

    fn write(&self, path: &Path, text: &str) -> Result<()> {
        corpus_io::write_text(&self.output(path), text)
    }

    /// Writes to `path` or, without one, to standard output.
    fn emit(&self, path: Option<&Path>, text: &str) -> Result<()> {
        match path {
            Some(p) => self.write(p, text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e)),
        }
    }

    fn emit_json<T: Serialize>(&self, path: Option<&Path>, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Validation(format!("cannot serialize report: {e}")))?;
        text.push('\n');
        self.emit(path, &text)
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context { config };
    match cli.command {
        Command::Preprocess(a) => cmd_preprocess(&ctx, a),
        Command::Merge(a) => cmd_merge(&ctx, a),
        Command::Project(a) => cmd_project(&ctx, a),
        Command::Agree(a) => cmd_agree(&ctx, a),
        Command::Sample(a) => cmd_sample(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Weights(a) => cmd_weights(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Aggregate(a) => cmd_aggregate(&ctx, a),
        Command::Ttest(a) => cmd_ttest(&ctx, a),
        Command::Select(a) => cmd_select(&ctx, a),
    }
}

fn cmd_preprocess(ctx: &Context, a: PreprocessArgs) -> CliResult {
    if a.min_tokens == 0 {
        return Err(Failure::Usage("--min-tokens must be at least 1".into()));
    }
    let cfg = &ctx.config;
    let mut pre = Preprocessor {
        min_tokens: a.min_tokens,
        ..Preprocessor::default()
    };
    if let Some(p) = a.rules.as_ref().or(cfg.rules.as_ref()) {
        pre.rules = preprocess::load_rules(p)?;
    }
    if let Some(p) = a.abbrev.as_ref().or(cfg.abbreviations.as_ref()) {
        pre.abbreviations = AbbreviationSet::load(p)?;
    }
    if let Some(p) = a.exclude.as_ref().or(cfg.exclusions.as_ref()) {
        pre.exclusions = ExclusionList::load(p)?;
    }
    let raws = corpus::read_raw_reviews(&a.input)?;
    let mut reviews = Vec::with_capacity(raws.len());
    for raw in &raws {
        match pre.process(raw) {
            Ok(Some(review)) => reviews.push(review),
            Ok(None) => {}
            Err(Error::EmptyReview(id)) if a.skip_empty => {
                eprintln!("warning: review `{id}` has no sentence left, dropped");
            }
            Err(e) => return Err(e.into()),
        }
    }
    corpus::write_reviews(&reviews, ctx.output(&a.out))?;
    eprintln!("preprocessed {} of {} reviews", reviews.len(), raws.len());
    Ok(())
}

fn load_assignments(
    path: Option<&PathBuf>,
    spans: &[corpus::SpanAnnotation],
) -> Result<Assignments> {
    match path {
        Some(p) => Assignments::load(p),
        None => Ok(Assignments::infer(spans)),
    }
}

fn cmd_merge(ctx: &Context, a: MergeArgs) -> CliResult {
    let reviews = corpus::read_reviews(&a.reviews)?;
    let spans = corpus::read_annotations(&a.annotations)?;
    let adjudication = match &a.adjudication {
        Some(p) => corpus::read_annotations(p)?,
        None => Vec::new(),
    };
    let assignments = load_assignments(a.assignments.as_ref(), &spans)?;
    let merged = annotate::merge_reviews(&reviews, &assignments, &spans, &adjudication)?;

    let by_id: HashMap<&str, &Review> = reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
    let items: Vec<(&TokenLabeling, &Review)> = merged
        .iter()
        .map(|m| (&m.gold, by_id[m.gold.review_id.as_str()]))
        .collect();
    corpus::write_token_labelings(&items, ctx.output(&a.out))?;

    let mut conflict_text = String::new();
    let mut n_conflicts = 0;
    for m in &merged {
        for t in &m.conflicts {
            conflict_text.push_str(&format!("{}\t{t}\n", m.gold.review_id));
            n_conflicts += 1;
        }
    }
    if let Some(p) = &a.conflicts {
        ctx.write(p, &conflict_text)?;
    }
    eprintln!("merged {} reviews", merged.len());
    if n_conflicts > 0 {
        eprintln!(
            "warning: {n_conflicts} token(s) without a majority carry NON provisionally; gold is incomplete"
        );
        if a.strict {
            return Err(Error::Validation(format!("{n_conflicts} unresolved conflict(s)")).into());
        }
    }
    Ok(())
}

/// Token documents paired with their reviews, checked for consistency.
fn token_labelings_for(reviews: &[Review], path: &Path) -> Result<Vec<TokenLabeling>> {
    let by_id: HashMap<&str, &Review> = reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
    corpus::read_token_labelings(path)?
        .into_iter()
        .map(|doc| {
            let review = by_id.get(doc.labeling.review_id.as_str()).ok_or_else(|| {
                Error::Validation(format!(
                    "{}: review `{}` is not in the reviews file",
                    path.display(),
                    doc.labeling.review_id
                ))
            })?;
            doc.check_against(review)?;
            Ok(doc.labeling)
        })
        .collect()
}

fn cmd_project(ctx: &Context, a: ProjectArgs) -> CliResult {
    let reviews = corpus::read_reviews(&a.reviews)?;
    let labelings = token_labelings_for(&reviews, &a.tokens)?;
    let by_id: HashMap<&str, &Review> = reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
    let projected = labelings
        .iter()
        .map(|l| annotate::project_to_sentences(l, by_id[l.review_id.as_str()]))
        .collect::<Result<Vec<_>>>()?;
    let items: Vec<_> = projected
        .iter()
        .map(|s| (s, by_id[s.review_id.as_str()]))
        .collect();
    corpus::write_sentence_labelings(&items, ctx.output(&a.out))?;
    Ok(())
}

fn cmd_agree(ctx: &Context, a: AgreeArgs) -> CliResult {
    let reviews = corpus::read_reviews(&a.reviews)?;
    let spans = corpus::read_annotations(&a.annotations)?;
    let assignments = load_assignments(a.assignments.as_ref(), &spans)?;
    assignments.check_covers(&spans)?;
    let gold_tokens = token_labelings_for(&reviews, &a.gold)?;

    let mut labelings = Vec::new();
    for review in &reviews {
        labelings.extend(annotate::annotator_labelings(review, &assignments, &spans)?);
    }
    let by_id: HashMap<&str, &Review> = reviews.iter().map(|r| (r.review_id.as_str(), r)).collect();
    let gold_sentences = match a.level {
        Level::Token => Vec::new(),
        Level::Sentence => gold_tokens
            .iter()
            .map(|g| annotate::project_to_sentences(g, by_id[g.review_id.as_str()]))
            .collect::<Result<Vec<_>>>()?,
    };
    let report = agreement::agreement_report(
        &reviews,
        &spans,
        &labelings,
        &gold_tokens,
        &gold_sentences,
        a.level,
    )?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    ctx.emit_json(a.report.as_deref(), &report)?;
    Ok(())
}

fn cmd_sample(ctx: &Context, a: SampleArgs) -> CliResult {
    let seed = ctx.seed(a.seed)?;
    let pool = corpus::read_reviews(&a.pool)?;
    let picked: Vec<Review> = datasetops::sample_for_annotation(&pool, a.n, seed)?
        .into_iter()
        .cloned()
        .collect();
    corpus::write_reviews(&picked, ctx.output(&a.out))?;
    Ok(())
}

/// A sentence addressed by review and position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub review_id: String,
    pub sentence_index: usize,
}

/// Contents of a split file. `train`, `val` and `test` index into `units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub task: Task,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub units: Vec<SentenceRef>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = corpus_io::read_text(path)?;
        let file: SplitFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            field: "splits".into(),
            message: e.to_string(),
        })?;
        let n = file.units.len();
        let mut seen = BTreeSet::new();
        for &i in file.train.iter().chain(&file.val).chain(&file.test) {
            if i >= n || !seen.insert(i) {
                return Err(Error::Validation(format!(
                    "{}: unit index {i} is out of range or repeated",
                    path.display()
                )));
            }
        }
        Ok(file)
    }

    fn part(&self, part: Part) -> BTreeSet<&SentenceRef> {
        let idx = match part {
            Part::Train => &self.train,
            Part::Val => &self.val,
            Part::Test => &self.test,
        };
        idx.iter().map(|&i| &self.units[i]).collect()
    }
}

fn cmd_split(ctx: &Context, a: SplitArgs) -> CliResult {
    let seed = ctx.seed(a.seed)?;
    let spec = SplitSpec {
        ratios: a
            .ratios
            .or(ctx.config.ratios)
            .unwrap_or(datasetops::DEFAULT_RATIOS),
        seed,
        stratify_on: a.task,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let docs = corpus::read_sentence_labelings(&a.gold)?;
    let mut units = Vec::new();
    let mut items = Vec::new();
    for doc in &docs {
        for (i, &label) in doc.labeling.labels.iter().enumerate() {
            // stance splits only cover argumentative sentences
            let Some(class) = a.task.map(label) else {
                continue;
            };
            let unit = SentenceRef {
                review_id: doc.labeling.review_id.clone(),
                sentence_index: i,
            };
            items.push((unit.clone(), class));
            units.push(unit);
        }
    }
    let split = datasetops::stratified_split(&items, &spec)?;
    let file = SplitFile {
        task: a.task,
        seed,
        ratios: spec.ratios,
        units,
        train: split.train,
        val: split.val,
        test: split.test,
    };
    ctx.emit_json(Some(&a.out), &file)?;
    eprintln!(
        "split {} sentences: train {}, val {}, test {}",
        file.units.len(),
        file.train.len(),
        file.val.len(),
        file.test.len()
    );
    Ok(())
}

fn cmd_stats(ctx: &Context, a: StatsArgs) -> CliResult {
    let tokens: Vec<TokenLabeling> = match &a.tokens {
        Some(p) => corpus::read_token_labelings(p)?
            .into_iter()
            .map(|d| d.labeling)
            .collect(),
        None => Vec::new(),
    };
    let sentences: Vec<_> = match &a.sentences {
        Some(p) => corpus::read_sentence_labelings(p)?
            .into_iter()
            .map(|d| d.labeling)
            .collect(),
        None => Vec::new(),
    };
    let stats = datasetops::distribution_stats(&tokens, &sentences, a.task)?;
    if a.json {
        ctx.emit_json(a.out.as_deref(), &stats)?;
    } else {
        ctx.emit(a.out.as_deref(), &stats.to_string())?;
    }
    Ok(())
}

fn cmd_weights(ctx: &Context, a: WeightsArgs) -> CliResult {
    let docs = corpus::read_sentence_labelings(&a.gold)?;
    let train = match &a.splits {
        Some(p) => {
            let file = SplitFile::load(p)?;
            if file.task != a.task {
                eprintln!(
                    "warning: split was stratified for task {}, weights requested for {}",
                    file.task, a.task
                );
            }
            Some(file)
        }
        None => None,
    };
    let train_units = train.as_ref().map(|f| f.part(Part::Train));
    let mut labels = Vec::new();
    for doc in &docs {
        for (i, &label) in doc.labeling.labels.iter().enumerate() {
            if let Some(units) = &train_units {
                let unit = SentenceRef {
                    review_id: doc.labeling.review_id.clone(),
                    sentence_index: i,
                };
                if !units.contains(&unit) {
                    continue;
                }
            }
            if let Some(class) = a.task.map(label) {
                labels.push(class);
            }
        }
    }
    let weights = datasetops::class_weights(&labels, a.task)?;
    ctx.emit_json(a.out.as_deref(), &weights)?;
    Ok(())
}

/// Labels of one review at the requested level, with the token range of
/// every sentence when labels are per token.
struct LevelDoc {
    labels: Vec<Label>,
    units: Vec<String>,
    sentence_ranges: Vec<std::ops::Range<usize>>,
}

fn read_level_docs(path: &Path, level: Level) -> Result<BTreeMap<String, LevelDoc>> {
    let mut out = BTreeMap::new();
    match level {
        Level::Token => {
            for doc in corpus::read_token_labelings(path)? {
                let ranges = doc.sentence_bounds.iter().map(|b| b.range()).collect();
                out.insert(
                    doc.labeling.review_id.clone(),
                    LevelDoc {
                        labels: doc.labeling.labels,
                        units: doc.tokens,
                        sentence_ranges: ranges,
                    },
                );
            }
        }
        Level::Sentence => {
            for doc in corpus::read_sentence_labelings(path)? {
                let n = doc.labeling.labels.len();
                out.insert(
                    doc.labeling.review_id.clone(),
                    LevelDoc {
                        labels: doc.labeling.labels,
                        units: doc.sentences,
                        sentence_ranges: (0..n).map(|i| i..i + 1).collect(),
                    },
                );
            }
        }
    }
    Ok(out)
}

/// Gold labels of the units that fall into `part` (all units without a
/// split), with their positions.
fn selected_units<'a>(
    gold: &'a BTreeMap<String, LevelDoc>,
    part: Option<&BTreeSet<&SentenceRef>>,
) -> Vec<(&'a str, usize, Label)> {
    let mut out = Vec::new();
    for (review_id, doc) in gold {
        for (s, range) in doc.sentence_ranges.iter().enumerate() {
            if let Some(part) = part {
                let unit = SentenceRef {
                    review_id: review_id.clone(),
                    sentence_index: s,
                };
                if !part.contains(&unit) {
                    continue;
                }
            }
            for i in range.clone() {
                out.push((review_id.as_str(), i, doc.labels[i]));
            }
        }
    }
    out
}

fn cmd_evaluate(ctx: &Context, a: EvaluateArgs) -> CliResult {
    let gold = read_level_docs(&a.gold, a.level)?;
    let splits = a.splits.as_deref().map(SplitFile::load).transpose()?;
    if let Some(s) = &splits {
        let known: BTreeSet<&str> = gold.keys().map(String::as_str).collect();
        if let Some(u) = s
            .units
            .iter()
            .find(|u| !known.contains(u.review_id.as_str()))
        {
            return Err(Error::Validation(format!(
                "split unit of review `{}` has no gold labeling",
                u.review_id
            ))
            .into());
        }
    }
    let part = splits.as_ref().map(|s| s.part(a.part));
    let units = selected_units(&gold, part.as_ref());

    let mut confusion = ConfusionMatrix::new();
    if a.majority_baseline {
        let train_part = splits.as_ref().map(|s| s.part(Part::Train));
        let train: Vec<TaskLabel> = selected_units(&gold, train_part.as_ref())
            .into_iter()
            .filter_map(|(_, _, l)| a.task.map(l))
            .collect();
        let class = evaluate::majority_class(&train, a.task).ok_or_else(|| {
            Error::Validation("no training units for the majority baseline".into())
        })?;
        eprintln!("majority class: {class}");
        for (_, _, g) in &units {
            if let Some(g) = a.task.map(*g) {
                confusion.add(g, class);
            }
        }
    } else {
        let pred_path = a.pred.as_deref().expect("clap requires --pred");
        let pred = read_level_docs(pred_path, a.level)?;
        for (review_id, g) in &gold {
            let p = pred.get(review_id).ok_or_else(|| {
                Error::Validation(format!("no prediction for review `{review_id}`"))
            })?;
            if p.units != g.units {
                return Err(Error::LengthMismatch {
                    what: format!(
                        "predicted units of review `{review_id}` (text differs from gold)"
                    ),
                    expected: g.units.len(),
                    found: p.units.len(),
                }
                .into());
            }
        }
        if let Some(extra) = pred.keys().find(|k| !gold.contains_key(*k)) {
            eprintln!("warning: prediction for review `{extra}` has no gold, ignored");
        }
        for (review_id, i, g) in &units {
            let Some(g) = a.task.map(*g) else {
                continue;
            };
            // a NON prediction on an argumentative unit is a miss under stance
            let p = a
                .task
                .map(pred[*review_id].labels[*i])
                .unwrap_or(TaskLabel::Non);
            confusion.add(g, p);
        }
    }
    let report = evaluate::report_from_confusion(confusion, a.task, a.level);
    for c in &report.zero_support {
        eprintln!("warning: class {c} has no gold support, scored 0");
    }
    ctx.emit_json(a.report.as_deref(), &report)?;
    Ok(())
}

/// One real per line; blank lines and `#` comments are skipped.
fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = corpus_io::read_text(path)?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line
            .parse()
            .map_err(|e| Error::parse(path, i + 1, "score", format!("`{line}`: {e}")))?;
        if !value.is_finite() {
            return Err(Error::parse(path, i + 1, "score", "score must be finite"));
        }
        scores.push(value);
    }
    Ok(scores)
}

fn cmd_aggregate(ctx: &Context, a: AggregateArgs) -> CliResult {
    let agg = evaluate::aggregate_seeds(&read_scores(&a.scores)?)?;
    ctx.emit_json(a.out.as_deref(), &agg)?;
    Ok(())
}

fn cmd_ttest(ctx: &Context, a: TtestArgs) -> CliResult {
    let result = evaluate::welch_ttest(&read_scores(&a.a)?, &read_scores(&a.b)?)?;
    if result.degenerate {
        eprintln!("warning: both groups have zero variance");
    }
    ctx.emit_json(a.out.as_deref(), &result)?;
    Ok(())
}

fn cmd_select(ctx: &Context, a: SelectArgs) -> CliResult {
    let spec = SelectionSpec {
        mode: a.mode,
        k_percent: a.k,
        seed: match a.mode {
            SelectionMode::Randomk => ctx.seed(a.seed)?,
            _ => a.seed.unwrap_or(0),
        },
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let reviews = corpus::read_reviews(&a.reviews)?;
    let probs = match &a.probs {
        Some(p) => corpus::read_probabilities(p)?,
        None => Vec::new(),
    };
    let selections = select::select_all(&reviews, &probs, &spec)?;
    let (papers, warnings) = select::emit_condensed(&reviews, &selections)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    select::write_condensed(&papers, ctx.output(&a.out))?;
    if let Some(p) = &a.selections {
        ctx.write(p, &corpus_io::json_lines(&selections)?)?;
    }
    Ok(())
}
