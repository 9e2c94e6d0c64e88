//! Command-line pipeline: score → split → schedule → simulate → analyze.
//!
//! Settings come from one JSON config file; command-line flags override it.
//! Relative paths in the config resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{
    bucket_comparison, fraction_below, macro_average_improvement, score_histogram, BucketMetric,
    BucketReport, Histogram,
};
use crate::corpus::{ingest_confidence_log, parse_corpus, LogMode};
use crate::error::{Error, Result};
use crate::scheduler::{build_curriculum, Curriculum};
use crate::scoring::{
    assign_meta_datasets, average_confidence_scores, cross_review_scores, MetaAssignment,
    ScoredCorpus,
};
use crate::seed::derive_seed;
use crate::simulate::{
    reports_table, run_experiment, ExperimentReport, LearnerConfig, OrderingStrategy,
    ScoringMethod, SyntheticSpec,
};
use crate::splitting::{
    dataset_level_splits, distribution_splits, uniform_splits, SplitPlan, SplitStrategy,
};

pub const THREADS_ENV: &str = "CURRIER_THREADS";

pub const ASSIGNMENT_FILE: &str = "assignment.jsonl";
pub const SCORED_FILE: &str = "scored.jsonl";
pub const PLAN_FILE: &str = "plan.jsonl";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const REPORTS_FILE: &str = "reports.json";
pub const REPORTS_TABLE_FILE: &str = "reports.txt";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const ANALYSIS_TABLE_FILE: &str = "analysis.txt";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

#[derive(Debug, Parser)]
#[command(
    name = "currier",
    version,
    about = "Confidence-based curriculum construction"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the cross-review meta-dataset partition for external trainers.
    Assign(AssignArgs),
    /// Turn a confidence log into difficulty scores.
    Score(ScoreArgs),
    /// Arrange a scored corpus into ordered splits.
    Split(SplitArgs),
    /// Build the stage-by-stage training manifest from a split plan.
    Schedule(ScheduleArgs),
    /// Run the toy-learner experiment over seeds and strategies.
    Simulate(SimulateArgs),
    /// Histograms, low-score fractions and per-bucket comparisons.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub n_meta: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Meta-dataset partition for cross-review logs; derived from the seed if absent.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    /// Expected scoring method: `average_confidence` or `cross_review`.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub scored: Option<PathBuf>,
    /// `dataset_level`, `uniform`, `distribution`, or a full form such as `uniform(3)`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Fraction of each earlier split replayed in later stages.
    #[arg(long)]
    pub frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Ordering strategies, e.g. `heterogeneous` or `distribution(3)+frac=0.4`.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    /// Number of experiment seeds (0..n).
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub learn_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Experiment report files; the first report is the baseline.
    #[arg(long)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub scored: Option<PathBuf>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Per-bucket metrics of run A (JSON array of {bucket, count, metric}).
    #[arg(long, requires = "buckets_b")]
    pub buckets_a: Option<PathBuf>,
    #[arg(long, requires = "buckets_a")]
    pub buckets_b: Option<PathBuf>,
    /// Per-dataset metrics of run A (JSON object dataset → number or {metric: number}).
    #[arg(long, requires = "metrics_b")]
    pub metrics_a: Option<PathBuf>,
    #[arg(long, requires = "metrics_a")]
    pub metrics_b: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub assignment: Option<PathBuf>,
    pub scored: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub spec: SyntheticSpec,
    pub learner: LearnerConfig,
    pub strategies: Vec<OrderingStrategy>,
    pub seeds: Vec<u64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            spec: SyntheticSpec::bundled(),
            learner: LearnerConfig::default(),
            strategies: vec![
                OrderingStrategy::Heterogeneous,
                OrderingStrategy::Curriculum {
                    split: SplitStrategy::Distribution(3),
                    frac: 0.4,
                },
            ],
            seeds: (0..20).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub bin_width: f64,
    pub threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.1,
            threshold: 0.1,
        }
    }
}

/// Whole-run configuration. Defaults: N = 5, E = 5, K = 3, frac = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// `average_confidence` or `cross_review`.
    pub method: String,
    #[serde(rename = "E")]
    pub epochs: usize,
    #[serde(rename = "N")]
    pub n_meta: usize,
    pub strategy: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub frac: f64,
    pub seed: u64,
    pub paths: Paths,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: "average_confidence".into(),
            epochs: 5,
            n_meta: 5,
            strategy: "distribution".into(),
            k: 3,
            frac: 0.0,
            seed: 0,
            paths: Paths::default(),
            simulation: SimulationConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut config.paths;
        for slot in [
            &mut p.corpus,
            &mut p.log,
            &mut p.assignment,
            &mut p.scored,
            &mut p.plan,
            &mut p.out,
        ] {
            if let Some(rel) = slot.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        Ok(config)
    }

    pub fn split_strategy(&self) -> Result<SplitStrategy> {
        if self.strategy.contains('(') {
            return self.strategy.parse();
        }
        match self.strategy.as_str() {
            "dataset_level" => Ok(SplitStrategy::DatasetLevel),
            "uniform" => Ok(SplitStrategy::Uniform(self.k)),
            "distribution" => Ok(SplitStrategy::Distribution(self.k)),
            other => Err(Error::Config(format!("unknown split strategy `{other}`"))),
        }
    }
}

struct Context {
    config: RunConfig,
    out: PathBuf,
}

impl Context {
    fn input(
        &self,
        flag: &Option<PathBuf>,
        configured: &Option<PathBuf>,
        default_name: &str,
    ) -> PathBuf {
        flag.clone()
            .or_else(|| configured.clone())
            .unwrap_or_else(|| self.out.join(default_name))
    }

    fn required(
        &self,
        flag: &Option<PathBuf>,
        configured: &Option<PathBuf>,
        what: &str,
    ) -> Result<PathBuf> {
        flag.clone().or_else(|| configured.clone()).ok_or_else(|| {
            Error::Config(format!(
                "no {what} file given (flag or config paths.{what})"
            ))
        })
    }
}

/// Runs one subcommand. Returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.simulation.spec.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.paths.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ctx = Context { config, out };

    match &cli.command {
        Command::Assign(args) => cmd_assign(&ctx, args),
        Command::Score(args) => cmd_score(&ctx, args),
        Command::Split(args) => cmd_split(&ctx, args),
        Command::Schedule(args) => cmd_schedule(&ctx, args),
        Command::Simulate(args) => cmd_simulate(&ctx, args),
        Command::Analyze(args) => cmd_analyze(&ctx, args),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn source(path: &Path) -> String {
    path.display().to_string()
}

/// Writes `contents`, reads the file back and checks it parses to `expected`.
fn write_checked<T: PartialEq>(
    path: &Path,
    contents: &str,
    expected: &T,
    parse: impl FnOnce(&str) -> Result<T>,
) -> Result<()> {
    write(path, contents)?;
    let back = parse(&read(path)?)?;
    if &back != expected {
        return Err(Error::Config(format!(
            "{} did not read back identically",
            path.display()
        )));
    }
    Ok(())
}

fn meta_seed(root: u64) -> u64 {
    derive_seed(root, "meta-partition")
}

fn cmd_assign(ctx: &Context, args: &AssignArgs) -> Result<Vec<PathBuf>> {
    let corpus_path = ctx.required(&args.corpus, &ctx.config.paths.corpus, "corpus")?;
    let corpus = parse_corpus(&read(&corpus_path)?, &source(&corpus_path))?;
    let n_meta = args.n_meta.unwrap_or(ctx.config.n_meta);
    let assignment = assign_meta_datasets(&corpus, n_meta, meta_seed(ctx.config.seed))?;
    let path = ctx.out.join(ASSIGNMENT_FILE);
    write_checked(&path, &assignment.to_jsonl(), &assignment, |t| {
        MetaAssignment::parse(t, &source(&path), &corpus)
    })?;
    Ok(vec![path])
}

fn cmd_score(ctx: &Context, args: &ScoreArgs) -> Result<Vec<PathBuf>> {
    let corpus_path = ctx.required(&args.corpus, &ctx.config.paths.corpus, "corpus")?;
    let log_path = ctx.required(&args.log, &ctx.config.paths.log, "log")?;
    let corpus = parse_corpus(&read(&corpus_path)?, &source(&corpus_path))?;
    let log_text = read(&log_path)?;
    let log = ingest_confidence_log(log_text.lines(), &corpus)?;

    let method = args.method.as_deref().unwrap_or(&ctx.config.method);
    let scored = match (method, log.mode()) {
        ("average_confidence", LogMode::AverageConfidence { .. }) => {
            average_confidence_scores(&log)?
        }
        ("cross_review", LogMode::CrossReview { n_meta }) => {
            let assignment = match args
                .assignment
                .as_ref()
                .or(ctx.config.paths.assignment.as_ref())
            {
                Some(path) => MetaAssignment::parse(&read(path)?, &source(path), &corpus)?,
                None => assign_meta_datasets(&corpus, n_meta, meta_seed(ctx.config.seed))?,
            };
            cross_review_scores(&assignment, &log)?
        }
        ("average_confidence" | "cross_review", found) => {
            return Err(Error::ModeMismatch {
                expected: method.to_string(),
                found: found.to_string(),
            })
        }
        (other, _) => return Err(Error::Config(format!("unknown scoring method `{other}`"))),
    };
    let path = ctx.out.join(SCORED_FILE);
    write_checked(&path, &scored.to_jsonl(), &scored, |t| {
        ScoredCorpus::parse(t, &source(&path))
    })?;
    Ok(vec![path])
}

fn cmd_split(ctx: &Context, args: &SplitArgs) -> Result<Vec<PathBuf>> {
    let scored_path = ctx.input(&args.scored, &ctx.config.paths.scored, SCORED_FILE);
    let scored = ScoredCorpus::parse(&read(&scored_path)?, &source(&scored_path))?;
    let mut config = ctx.config.clone();
    if let Some(s) = &args.strategy {
        config.strategy = s.clone();
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    let plan = match config.split_strategy()? {
        SplitStrategy::DatasetLevel => dataset_level_splits(&scored)?,
        SplitStrategy::Uniform(k) => uniform_splits(&scored, k)?,
        SplitStrategy::Distribution(k) => distribution_splits(&scored, k)?,
    };
    let path = ctx.out.join(PLAN_FILE);
    write_checked(&path, &plan.to_jsonl(), &plan, |t| {
        SplitPlan::parse(t, &source(&path))
    })?;
    Ok(vec![path])
}

fn cmd_schedule(ctx: &Context, args: &ScheduleArgs) -> Result<Vec<PathBuf>> {
    let plan_path = ctx.input(&args.plan, &ctx.config.paths.plan, PLAN_FILE);
    let plan = SplitPlan::parse(&read(&plan_path)?, &source(&plan_path))?;
    let frac = args.frac.unwrap_or(ctx.config.frac);
    let curriculum = build_curriculum(&plan, frac, ctx.config.seed)?;
    let path = ctx.out.join(MANIFEST_FILE);
    write_checked(&path, &curriculum.emit_manifest(), &curriculum, |t| {
        Curriculum::parse_manifest(t, &source(&path))
    })?;
    Ok(vec![path])
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let mut sim = ctx.config.simulation.clone();
    sim.learner.scoring = match ctx.config.method.as_str() {
        "average_confidence" => ScoringMethod::AverageConfidence,
        "cross_review" => ScoringMethod::CrossReview,
        other => return Err(Error::Config(format!("unknown scoring method `{other}`"))),
    };
    sim.learner.warmup_epochs = ctx.config.epochs;
    sim.learner.n_meta = ctx.config.n_meta;
    if let Some(list) = &args.strategies {
        sim.strategies = list.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(n) = args.seeds {
        sim.seeds = (0..n).collect();
    }
    if let Some(lr) = args.learn_rate {
        sim.learner.learn_rate = lr;
    }
    let reports = thread_pool()?
        .install(|| run_experiment(&sim.strategies, &sim.spec, &sim.learner, &sim.seeds))?;

    let json_path = ctx.out.join(REPORTS_FILE);
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    write_checked(&json_path, &json, &reports, |t| {
        serde_json::from_str::<Vec<ExperimentReport>>(t)
            .map_err(|e| Error::parse(&source(&json_path), e.line(), e.to_string()))
    })?;
    let table_path = ctx.out.join(REPORTS_TABLE_FILE);
    write(&table_path, &reports_table(&reports))?;
    Ok(vec![json_path, table_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub report: BucketReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalysisOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction_below: Option<FractionBelow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparisons: Vec<Comparison>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub macro_average_improvement: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionBelow {
    pub threshold: f64,
    pub fraction: f64,
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Error::parse(&source(path), e.line(), e.to_string()))
}

fn read_reports(path: &Path) -> Result<Vec<ExperimentReport>> {
    let value = read_json(path)?;
    let parsed = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|r| vec![r])
    };
    parsed.map_err(|e| Error::parse(&source(path), 0, e.to_string()))
}

/// Per-dataset metrics as `metric name → dataset → value`. A plain number per
/// dataset is filed under `metric`.
fn read_metrics(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let value = read_json(path)?;
    let bad = |m: String| Error::parse(&source(path), 0, m);
    let obj = value
        .as_object()
        .ok_or_else(|| bad("expected a JSON object".into()))?;
    let mut by_metric: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (dataset, v) in obj {
        match v {
            Value::Number(n) => {
                by_metric
                    .entry("metric".into())
                    .or_default()
                    .insert(dataset.clone(), n.as_f64().unwrap_or(f64::NAN));
            }
            Value::Object(inner) => {
                for (metric, n) in inner {
                    let n = n
                        .as_f64()
                        .ok_or_else(|| bad(format!("{dataset}.{metric} is not a number")))?;
                    by_metric
                        .entry(metric.clone())
                        .or_default()
                        .insert(dataset.clone(), n);
                }
            }
            _ => {
                return Err(bad(format!(
                    "`{dataset}` must map to a number or an object"
                )))
            }
        }
    }
    Ok(by_metric)
}

fn cmd_analyze(ctx: &Context, args: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let analysis = &ctx.config.analysis;
    let bin_width = args.bin_width.unwrap_or(analysis.bin_width);
    let threshold = args.threshold.unwrap_or(analysis.threshold);
    let mut output = AnalysisOutput::default();
    let mut text = String::new();
    let mut written = Vec::new();

    let scored_path = args
        .scored
        .clone()
        .or_else(|| ctx.config.paths.scored.clone())
        .or_else(|| {
            let p = ctx.out.join(SCORED_FILE);
            p.exists().then_some(p)
        });
    if let Some(path) = scored_path {
        let scored = ScoredCorpus::parse(&read(&path)?, &source(&path))?;
        let hist = score_histogram(&scored, bin_width)?;
        let frac = fraction_below(&scored, threshold);
        text.push_str(&format!(
            "score histogram (width {bin_width}), {} instances\n",
            hist.total()
        ));
        for b in &hist.bins {
            text.push_str(&format!("{:>6}  {}\n", format!("{:.2}", b.lower), b.count));
        }
        for (ds, m) in &hist.per_dataset_mean {
            text.push_str(&format!("mean score {ds}: {m:.4}\n"));
        }
        text.push_str(&format!(
            "fraction with score <= {threshold}: {frac:.4}\n\n"
        ));
        let csv_path = ctx.out.join(HISTOGRAM_FILE);
        write(&csv_path, &hist.to_csv())?;
        written.push(csv_path);
        output.histogram = Some(hist);
        output.fraction_below = Some(FractionBelow {
            threshold,
            fraction: frac,
        });
    }

    let report_paths = if args.reports.is_empty() {
        let p = ctx.out.join(REPORTS_FILE);
        if p.exists() {
            vec![p]
        } else {
            vec![]
        }
    } else {
        args.reports.clone()
    };
    let mut reports = Vec::new();
    for path in &report_paths {
        reports.extend(read_reports(path)?);
    }
    if let Some((baseline, rest)) = reports.split_first() {
        for candidate in rest {
            if (candidate.bucket_width - baseline.bucket_width).abs() > 1e-12 {
                return Err(Error::BucketMismatch(format!(
                    "bucket width {} vs {}",
                    baseline.bucket_width, candidate.bucket_width
                )));
            }
            let report = bucket_comparison(
                &baseline.bucket_metrics(),
                &candidate.bucket_metrics(),
                baseline.bucket_width,
            )?;
            text.push_str(&format!(
                "{} vs {}\n",
                candidate.strategy, baseline.strategy
            ));
            text.push_str(&report.to_table(&baseline.strategy, &candidate.strategy));
            text.push('\n');
            output.comparisons.push(Comparison {
                baseline: baseline.strategy.clone(),
                candidate: candidate.strategy.clone(),
                report,
            });
        }
    }

    if let (Some(a), Some(b)) = (&args.buckets_a, &args.buckets_b) {
        let parse = |p: &Path| -> Result<Vec<BucketMetric>> {
            serde_json::from_value(read_json(p)?)
                .map_err(|e| Error::parse(&source(p), 0, e.to_string()))
        };
        let report = bucket_comparison(&parse(a)?, &parse(b)?, bin_width)?;
        text.push_str(&format!("{} vs {}\n", b.display(), a.display()));
        text.push_str(&report.to_table("A", "B"));
        text.push('\n');
        output.comparisons.push(Comparison {
            baseline: source(a),
            candidate: source(b),
            report,
        });
    }

    if let (Some(a), Some(b)) = (&args.metrics_a, &args.metrics_b) {
        let ma = read_metrics(a)?;
        let mb = read_metrics(b)?;
        if !ma.keys().eq(mb.keys()) {
            return Err(Error::KeyMismatch(format!(
                "metrics {:?} vs {:?}",
                ma.keys().collect::<Vec<_>>(),
                mb.keys().collect::<Vec<_>>()
            )));
        }
        for (metric, per_a) in &ma {
            let value = macro_average_improvement(per_a, &mb[metric])?;
            text.push_str(&format!(
                "macro-average improvement ({metric}): {value:+.4}\n"
            ));
            output
                .macro_average_improvement
                .insert(metric.clone(), value);
        }
    }

    if output == AnalysisOutput::default() {
        return Err(Error::Config(
            "nothing to analyze: give --scored, --reports, --buckets-a/b or --metrics-a/b".into(),
        ));
    }

    let json_path = ctx.out.join(ANALYSIS_FILE);
    let json = serde_json::to_string_pretty(&output).expect("analysis serializes") + "\n";
    write_checked(&json_path, &json, &output, |t| {
        serde_json::from_str::<AnalysisOutput>(t)
            .map_err(|e| Error::parse(&source(&json_path), e.line(), e.to_string()))
    })?;
    let table_path = ctx.out.join(ANALYSIS_TABLE_FILE);
    write(&table_path, &text)?;
    written.push(json_path);
    written.push(table_path);
    Ok(written)
}

/// Machine-readable error object written to stderr on failure.
pub fn error_object(err: &Error) -> Value {
    serde_json::json!({ "error": err.kind(), "message": err.to_string() })
}
