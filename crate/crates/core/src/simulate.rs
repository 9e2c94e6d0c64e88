//! Desk-scale end-to-end harness.
//!
//! A synthetic multi-task corpus is generated with a latent difficulty δ per
//! instance. A toy learner holds one skill value per dataset and predicts the
//! correct answer with confidence `logistic(steepness · (skill − δ))`. Each
//! visit raises the skill by `learn_rate · c · (1 − c)`, so learning is fastest
//! at the learner's frontier (c ≈ 0.5) and presentation order matters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::BucketMetric;
use crate::corpus::{
    validate_corpus, ConfidenceLog, Corpus, CrossConfidenceRecord, EpochConfidenceRecord,
    InstanceRef,
};
use crate::error::{Error, Result};
use crate::numeric::{bin_count, bin_index, bin_lower_edge, logistic};
use crate::scheduler::{build_curriculum, Curriculum};
use crate::scoring::{
    assign_meta_datasets, average_confidence_scores, cross_review_scores, ScoredCorpus,
};
use crate::seed::{derive_seed, labeled_rng};
use crate::splitting::{dataset_level_splits, distribution_splits, uniform_splits, SplitStrategy};

/// Distribution of latent difficulty δ ∈ [0, 1] within one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DifficultyProfile {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl DifficultyProfile {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DifficultyProfile::Constant { value } => (0.0..=1.0).contains(&value),
            DifficultyProfile::Uniform { low, high } => {
                (0.0..=1.0).contains(&low) && (0.0..=1.0).contains(&high) && low <= high
            }
            DifficultyProfile::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadSpec(format!(
                "profile {self:?} does not yield δ in [0, 1]"
            )))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DifficultyProfile::Constant { value } => value,
            DifficultyProfile::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            DifficultyProfile::Beta { alpha, beta } => Beta::new(alpha, beta)
                .expect("validated parameters")
                .sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_datasets: usize,
    pub instances_per_dataset: usize,
    /// Held-out instances per dataset used for evaluation.
    #[serde(default = "default_eval_per_dataset")]
    pub eval_per_dataset: usize,
    /// One profile per dataset, or a single profile shared by all.
    pub difficulty_profile: Vec<DifficultyProfile>,
    pub seed: u64,
}

fn default_eval_per_dataset() -> usize {
    200
}

impl SyntheticSpec {
    /// Five datasets of 200 instances spanning easy to hard.
    pub fn bundled() -> Self {
        Self {
            n_datasets: 5,
            instances_per_dataset: 200,
            eval_per_dataset: 200,
            difficulty_profile: vec![
                DifficultyProfile::Beta {
                    alpha: 2.0,
                    beta: 5.0,
                },
                DifficultyProfile::Uniform {
                    low: 0.0,
                    high: 0.6,
                },
                DifficultyProfile::Beta {
                    alpha: 2.0,
                    beta: 2.0,
                },
                DifficultyProfile::Uniform {
                    low: 0.3,
                    high: 1.0,
                },
                DifficultyProfile::Beta {
                    alpha: 5.0,
                    beta: 2.0,
                },
            ],
            seed: 2022,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_datasets == 0 || self.instances_per_dataset == 0 {
            return Err(Error::BadSpec(
                "need at least one dataset and one instance".into(),
            ));
        }
        if self.difficulty_profile.len() != 1 && self.difficulty_profile.len() != self.n_datasets {
            return Err(Error::BadSpec(format!(
                "{} profiles for {} datasets",
                self.difficulty_profile.len(),
                self.n_datasets
            )));
        }
        self.difficulty_profile
            .iter()
            .try_for_each(DifficultyProfile::validate)
    }

    fn profile(&self, dataset: usize) -> &DifficultyProfile {
        if self.difficulty_profile.len() == 1 {
            &self.difficulty_profile[0]
        } else {
            &self.difficulty_profile[dataset]
        }
    }

    pub fn dataset_id(dataset: usize) -> String {
        format!("task{:02}", dataset + 1)
    }
}

/// Latent difficulty per corpus instance, in corpus order. Never shown to the
/// learner; only used for evaluation bucketing.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenDifficulty(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub dataset_id: String,
    pub delta: f64,
}

pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<(Corpus, HiddenDifficulty)> {
    spec.validate()?;
    let mut instances = Vec::with_capacity(spec.n_datasets * spec.instances_per_dataset);
    let mut deltas = Vec::with_capacity(instances.capacity());
    for d in 0..spec.n_datasets {
        let mut rng = labeled_rng(spec.seed, &format!("train/dataset={d}"));
        let dataset_id = SyntheticSpec::dataset_id(d);
        for i in 0..spec.instances_per_dataset {
            instances.push(InstanceRef::new(
                format!("{dataset_id}-{i:05}"),
                dataset_id.clone(),
            ));
            deltas.push(spec.profile(d).sample(&mut rng));
        }
    }
    Ok((validate_corpus(instances)?, HiddenDifficulty(deltas)))
}

pub fn generate_eval_set(spec: &SyntheticSpec) -> Result<Vec<EvalItem>> {
    spec.validate()?;
    let mut items = Vec::with_capacity(spec.n_datasets * spec.eval_per_dataset);
    for d in 0..spec.n_datasets {
        let mut rng = labeled_rng(spec.seed, &format!("eval/dataset={d}"));
        for _ in 0..spec.eval_per_dataset {
            items.push(EvalItem {
                dataset_id: SyntheticSpec::dataset_id(d),
                delta: spec.profile(d).sample(&mut rng),
            });
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMethod {
    AverageConfidence,
    CrossReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub steepness: f64,
    pub learn_rate: f64,
    pub initial_skill: f64,
    pub scoring: ScoringMethod,
    /// Warm-up epochs E for average-confidence scoring.
    pub warmup_epochs: usize,
    /// Number of cross-review meta-datasets N.
    pub n_meta: usize,
    /// Training epochs of each cross-review meta model.
    pub meta_epochs: usize,
    /// Passes over each of the K split stages.
    pub stage_passes: usize,
    /// Passes over the closing full-corpus stage.
    pub final_passes: usize,
    /// Epochs for the heterogeneous baseline.
    pub baseline_epochs: usize,
    /// Continue from the warm-up learner instead of a fresh one.
    pub reuse_warmup: bool,
    pub bucket_width: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            steepness: 12.0,
            learn_rate: 0.02,
            initial_skill: 0.0,
            scoring: ScoringMethod::AverageConfidence,
            warmup_epochs: 5,
            n_meta: 5,
            meta_epochs: 5,
            stage_passes: 1,
            final_passes: 1,
            baseline_epochs: 2,
            reuse_warmup: false,
            bucket_width: 0.1,
        }
    }
}

impl LearnerConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.steepness > 0.0) {
            return bad("steepness must be positive");
        }
        if !(self.learn_rate >= 0.0) {
            return bad("learn_rate must be non-negative");
        }
        if !(self.initial_skill >= 0.0) {
            return bad("initial_skill must be non-negative");
        }
        if self.warmup_epochs == 0 || self.meta_epochs == 0 {
            return bad("warm-up and meta epochs must be positive");
        }
        if self.n_meta < 2 {
            return Err(Error::BadN(self.n_meta));
        }
        if !(self.bucket_width > 0.0 && self.bucket_width <= 1.0) {
            return Err(Error::BadBinWidth(self.bucket_width));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLearnerState {
    pub skill: BTreeMap<String, f64>,
    pub steepness: f64,
    pub learn_rate: f64,
}

impl ToyLearnerState {
    pub fn fresh(datasets: impl IntoIterator<Item = String>, config: &LearnerConfig) -> Self {
        Self {
            skill: datasets
                .into_iter()
                .map(|d| (d, config.initial_skill))
                .collect(),
            steepness: config.steepness,
            learn_rate: config.learn_rate,
        }
    }

    /// Confidence in the correct answer for an instance of difficulty `delta`.
    pub fn confidence(&self, dataset_id: &str, delta: f64) -> f64 {
        let skill = self.skill.get(dataset_id).copied().unwrap_or(0.0);
        logistic(self.steepness * (skill - delta))
    }

    pub fn is_correct(&self, dataset_id: &str, delta: f64) -> bool {
        self.confidence(dataset_id, delta) > 0.5
    }
}

/// A sequence of passes over corpus positions. A checkpoint is taken after
/// each pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOrder {
    passes: Vec<Vec<usize>>,
}

impl TrainingOrder {
    /// Every epoch visits the whole corpus in a fresh seeded shuffle.
    pub fn heterogeneous(corpus: &Corpus, epochs: usize, seed: u64) -> Self {
        let passes = (0..epochs)
            .map(|e| {
                let mut order: Vec<usize> = (0..corpus.len()).collect();
                order.shuffle(&mut labeled_rng(seed, &format!("heterogeneous/epoch={e}")));
                order
            })
            .collect();
        Self { passes }
    }

    /// Stages of a curriculum in manifest order; split stages are repeated
    /// `stage_passes` times and the final stage `final_passes` times.
    pub fn from_curriculum(
        curriculum: &Curriculum,
        corpus: &Corpus,
        stage_passes: usize,
        final_passes: usize,
    ) -> Result<Self> {
        let last = curriculum.stages.len().saturating_sub(1);
        let mut passes = Vec::new();
        for (i, stage) in curriculum.stages.iter().enumerate() {
            let positions = stage
                .members
                .iter()
                .map(|m| {
                    corpus.position(&m.instance.instance_id).ok_or_else(|| {
                        Error::OrderCorpusMismatch(format!(
                            "`{}` is not in the corpus",
                            m.instance.instance_id
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let repeat = if i == last {
                final_passes
            } else {
                stage_passes
            };
            for _ in 0..repeat {
                passes.push(positions.clone());
            }
        }
        Ok(Self { passes })
    }

    pub fn from_passes(passes: Vec<Vec<usize>>) -> Self {
        Self { passes }
    }

    pub fn passes(&self) -> &[Vec<usize>] {
        &self.passes
    }

    pub fn visits(&self) -> usize {
        self.passes.iter().map(Vec::len).sum()
    }

    fn check_covers(&self, corpus: &Corpus) -> Result<()> {
        if self.passes.is_empty() {
            return Err(Error::OrderCorpusMismatch("order has no passes".into()));
        }
        let mut covered = vec![false; corpus.len()];
        for &p in self.passes.iter().flatten() {
            *covered.get_mut(p).ok_or_else(|| {
                Error::OrderCorpusMismatch(format!(
                    "position {p} is outside a corpus of {}",
                    corpus.len()
                ))
            })? = true;
        }
        match covered.iter().position(|c| !c) {
            Some(p) => Err(Error::OrderCorpusMismatch(format!(
                "instance `{}` is never visited",
                corpus.instances()[p].instance_id
            ))),
            None => Ok(()),
        }
    }
}

/// Trains the toy learner along `order`, recording every instance's
/// confidence after each pass.
pub fn train_toy_learner(
    order: &TrainingOrder,
    corpus: &Corpus,
    difficulty: &HiddenDifficulty,
    config: &LearnerConfig,
    initial: Option<ToyLearnerState>,
) -> Result<(ToyLearnerState, ConfidenceLog)> {
    if difficulty.0.len() != corpus.len() {
        return Err(Error::OrderCorpusMismatch(format!(
            "{} difficulties for {} instances",
            difficulty.0.len(),
            corpus.len()
        )));
    }
    order.check_covers(corpus)?;
    let mut state = initial
        .unwrap_or_else(|| ToyLearnerState::fresh(corpus.datasets().iter().cloned(), config));

    // dense skill vector for the hot loop
    let names: Vec<String> = state.skill.keys().cloned().collect();
    let dataset_of: Vec<usize> = corpus
        .instances()
        .iter()
        .map(|inst| {
            names
                .binary_search(&inst.dataset_id)
                .expect("skill covers every dataset")
        })
        .collect();
    let mut skill: Vec<f64> = state.skill.values().copied().collect();
    let confidence = |skill: &[f64], p: usize| {
        logistic(state.steepness * (skill[dataset_of[p]] - difficulty.0[p]))
    };

    let mut history: Vec<Vec<f64>> = vec![Vec::with_capacity(order.passes.len()); corpus.len()];
    for pass in &order.passes {
        for &p in pass {
            let c = confidence(&skill, p);
            skill[dataset_of[p]] += state.learn_rate * c * (1.0 - c);
        }
        for (p, h) in history.iter_mut().enumerate() {
            h.push(confidence(&skill, p));
        }
    }
    for (name, value) in names.iter().zip(skill) {
        state.skill.insert(name.clone(), value);
    }

    let records = corpus
        .instances()
        .iter()
        .zip(history)
        .map(|(inst, confidences)| EpochConfidenceRecord {
            instance: inst.clone(),
            confidences,
        })
        .collect();
    let log = ConfidenceLog::average_confidence(corpus.clone(), order.passes.len(), records)?;
    Ok((state, log))
}

/// Trains one learner per meta-dataset and collects, for every instance, the
/// final confidence of each model that did not train on it.
pub fn cross_review_log(
    corpus: &Corpus,
    difficulty: &HiddenDifficulty,
    config: &LearnerConfig,
    seed: u64,
) -> Result<(crate::scoring::MetaAssignment, ConfidenceLog)> {
    let assignment =
        assign_meta_datasets(corpus, config.n_meta, derive_seed(seed, "meta-partition"))?;
    let mut models = Vec::with_capacity(config.n_meta);
    for meta in 1..=config.n_meta {
        let members = assignment.members(meta);
        let passes = (0..config.meta_epochs)
            .map(|e| {
                let mut order = members.clone();
                order.shuffle(&mut labeled_rng(seed, &format!("meta={meta}/epoch={e}")));
                order
            })
            .collect::<Vec<_>>();
        let mut state = ToyLearnerState::fresh(corpus.datasets().iter().cloned(), config);
        // the meta model only sees its own members; drive the update directly
        for pass in &passes {
            for &p in pass {
                let inst = &corpus.instances()[p];
                let c = state.confidence(&inst.dataset_id, difficulty.0[p]);
                *state
                    .skill
                    .get_mut(&inst.dataset_id)
                    .expect("known dataset") += state.learn_rate * c * (1.0 - c);
            }
        }
        models.push(state);
    }
    let records = corpus
        .instances()
        .iter()
        .zip(assignment.metas())
        .enumerate()
        .map(|(p, (inst, &home))| CrossConfidenceRecord {
            instance: inst.clone(),
            home_meta: home,
            confidences: (1..=config.n_meta)
                .filter(|&j| j != home)
                .map(|j| {
                    (
                        j,
                        models[j - 1].confidence(&inst.dataset_id, difficulty.0[p]),
                    )
                })
                .collect(),
        })
        .collect();
    let log = ConfidenceLog::cross_review(corpus.clone(), config.n_meta, records)?;
    Ok((assignment, log))
}

/// How the final learner's training data is ordered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderingStrategy {
    /// All datasets combined and shuffled every epoch.
    Heterogeneous,
    Curriculum {
        split: SplitStrategy,
        frac: f64,
    },
}

impl fmt::Display for OrderingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderingStrategy::Heterogeneous => f.write_str("heterogeneous"),
            OrderingStrategy::Curriculum { split, frac } => write!(f, "{split}+frac={frac}"),
        }
    }
}

impl FromStr for OrderingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "heterogeneous" {
            return Ok(OrderingStrategy::Heterogeneous);
        }
        let (split, frac) = match s.split_once("+frac=") {
            Some((split, frac)) => (
                split,
                frac.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad frac in strategy `{s}`")))?,
            ),
            None => (s, 0.0),
        };
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::BadFrac(frac));
        }
        Ok(OrderingStrategy::Curriculum {
            split: split.parse()?,
            frac,
        })
    }
}

impl Serialize for OrderingStrategy {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OrderingStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketAccuracy {
    /// Lower edge of the δ bucket.
    pub lower: f64,
    /// Evaluation instances in the bucket, summed over seeds.
    pub count: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: String,
    pub seeds: Vec<u64>,
    pub bucket_width: f64,
    pub per_bucket_accuracy: Vec<BucketAccuracy>,
    pub overall_accuracy: f64,
    pub per_seed_accuracy: Vec<f64>,
    /// Instance visits made by the final learner, per seed.
    pub visits_per_seed: Vec<usize>,
}

impl ExperimentReport {
    pub fn bucket_metrics(&self) -> Vec<BucketMetric> {
        self.per_bucket_accuracy
            .iter()
            .map(|b| BucketMetric {
                bucket: b.lower,
                count: b.count,
                metric: b.accuracy,
            })
            .collect()
    }

    /// Everything except the strategy label.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.seeds == other.seeds
            && self.bucket_width == other.bucket_width
            && self.per_bucket_accuracy == other.per_bucket_accuracy
            && self.overall_accuracy == other.overall_accuracy
            && self.per_seed_accuracy == other.per_seed_accuracy
    }
}

struct SeedOutcome {
    correct: Vec<usize>,
    counts: Vec<usize>,
    accuracy: f64,
    visits: usize,
}

fn score_corpus(
    corpus: &Corpus,
    difficulty: &HiddenDifficulty,
    config: &LearnerConfig,
    seed: u64,
) -> Result<(ScoredCorpus, Option<ToyLearnerState>)> {
    match config.scoring {
        ScoringMethod::AverageConfidence => {
            let order = TrainingOrder::heterogeneous(
                corpus,
                config.warmup_epochs,
                derive_seed(seed, "warmup"),
            );
            let (state, log) = train_toy_learner(&order, corpus, difficulty, config, None)?;
            Ok((average_confidence_scores(&log)?, Some(state)))
        }
        ScoringMethod::CrossReview => {
            let (assignment, log) = cross_review_log(corpus, difficulty, config, seed)?;
            Ok((cross_review_scores(&assignment, &log)?, None))
        }
    }
}

fn run_one_seed(
    strategies: &[OrderingStrategy],
    spec: &SyntheticSpec,
    config: &LearnerConfig,
    seed: u64,
) -> Result<Vec<SeedOutcome>> {
    let data_spec = SyntheticSpec {
        seed: derive_seed(spec.seed, &format!("run={seed}")),
        ..spec.clone()
    };
    let (corpus, difficulty) = generate_synthetic_corpus(&data_spec)?;
    let eval = generate_eval_set(&data_spec)?;
    let (scored, warm) = score_corpus(&corpus, &difficulty, config, seed)?;
    let bins = bin_count(config.bucket_width);

    strategies
        .iter()
        .map(|strategy| {
            let order = match strategy {
                OrderingStrategy::Heterogeneous => TrainingOrder::heterogeneous(
                    &corpus,
                    config.baseline_epochs,
                    derive_seed(seed, "train"),
                ),
                OrderingStrategy::Curriculum { split, frac } => {
                    let plan = match *split {
                        SplitStrategy::DatasetLevel => dataset_level_splits(&scored)?,
                        SplitStrategy::Uniform(k) => uniform_splits(&scored, k)?,
                        SplitStrategy::Distribution(k) => distribution_splits(&scored, k)?,
                    };
                    let curriculum =
                        build_curriculum(&plan, *frac, derive_seed(seed, "curriculum"))?;
                    TrainingOrder::from_curriculum(
                        &curriculum,
                        &corpus,
                        config.stage_passes,
                        config.final_passes,
                    )?
                }
            };
            let initial = if config.reuse_warmup {
                warm.clone()
            } else {
                None
            };
            let (state, _) = train_toy_learner(&order, &corpus, &difficulty, config, initial)?;

            let mut correct = vec![0usize; bins];
            let mut counts = vec![0usize; bins];
            for item in &eval {
                let b = bin_index(item.delta, config.bucket_width);
                counts[b] += 1;
                correct[b] += usize::from(state.is_correct(&item.dataset_id, item.delta));
            }
            let total_correct: usize = correct.iter().sum();
            Ok(SeedOutcome {
                accuracy: total_correct as f64 / eval.len().max(1) as f64,
                correct,
                counts,
                visits: order.visits(),
            })
        })
        .collect()
}

/// Runs every strategy on every seed and pools the results per strategy.
/// Seeds run in parallel on the current rayon pool; the output does not depend
/// on scheduling.
pub fn run_experiment(
    strategies: &[OrderingStrategy],
    spec: &SyntheticSpec,
    config: &LearnerConfig,
    seeds: &[u64],
) -> Result<Vec<ExperimentReport>> {
    if strategies.is_empty() {
        return Err(Error::Config("at least one strategy is required".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    spec.validate()?;
    config.validate()?;

    let outcomes: Vec<Vec<SeedOutcome>> = seeds
        .par_iter()
        .map(|&seed| run_one_seed(strategies, spec, config, seed))
        .collect::<Result<_>>()?;

    let bins = bin_count(config.bucket_width);
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(s, strategy)| {
            let mut correct = vec![0usize; bins];
            let mut counts = vec![0usize; bins];
            let mut per_seed = Vec::with_capacity(seeds.len());
            let mut visits = Vec::with_capacity(seeds.len());
            for run in &outcomes {
                let o = &run[s];
                for b in 0..bins {
                    correct[b] += o.correct[b];
                    counts[b] += o.counts[b];
                }
                per_seed.push(o.accuracy);
                visits.push(o.visits);
            }
            let per_bucket_accuracy = (0..bins)
                .map(|b| BucketAccuracy {
                    lower: bin_lower_edge(b, config.bucket_width),
                    count: counts[b],
                    correct: correct[b],
                    accuracy: (counts[b] > 0).then(|| correct[b] as f64 / counts[b] as f64),
                })
                .collect();
            ExperimentReport {
                strategy: strategy.to_string(),
                seeds: seeds.to_vec(),
                bucket_width: config.bucket_width,
                per_bucket_accuracy,
                overall_accuracy: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
                per_seed_accuracy: per_seed,
                visits_per_seed: visits,
            }
        })
        .collect())
}

/// Plain-text summary of a set of reports, one row per bucket.
pub fn reports_table(reports: &[ExperimentReport]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = write!(out, "{:>8}  {:>7}", "bucket", "count");
    for r in reports {
        let _ = write!(out, "  {:>26}", r.strategy);
    }
    out.push('\n');
    if let Some(first) = reports.first() {
        for (b, bucket) in first.per_bucket_accuracy.iter().enumerate() {
            let _ = write!(out, "{:>8.2}  {:>7}", bucket.lower, bucket.count);
            for r in reports {
                let cell = r.per_bucket_accuracy[b]
                    .accuracy
                    .map_or_else(|| "-".to_string(), |a| format!("{:.4}", a));
                let _ = write!(out, "  {cell:>26}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:>8}  {:>7}", "overall", "");
        for r in reports {
            let _ = write!(out, "  {:>26.4}", r.overall_accuracy);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            n_datasets: 3,
            instances_per_dataset: 100,
            eval_per_dataset: 50,
            difficulty_profile: vec![DifficultyProfile::Uniform {
                low: 0.0,
                high: 1.0,
            }],
            seed: 4,
        }
    }

    #[test]
    fn corpus_size_and_determinism() {
        let (c, d) = generate_synthetic_corpus(&small_spec()).unwrap();
        assert_eq!(c.len(), 300);
        assert_eq!(d.0.len(), 300);
        let (c2, d2) = generate_synthetic_corpus(&small_spec()).unwrap();
        assert_eq!(c, c2);
        assert_eq!(d, d2);
        assert!(d.0.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn bad_spec_rejected() {
        let mut spec = small_spec();
        spec.n_datasets = 0;
        assert_eq!(
            generate_synthetic_corpus(&spec).unwrap_err().kind(),
            "BadSpec"
        );
        let mut spec = small_spec();
        spec.difficulty_profile = vec![DifficultyProfile::Uniform {
            low: 0.5,
            high: 1.5,
        }];
        assert_eq!(
            generate_synthetic_corpus(&spec).unwrap_err().kind(),
            "BadSpec"
        );
        let mut spec = small_spec();
        spec.difficulty_profile = vec![DifficultyProfile::Constant { value: 0.1 }; 2];
        assert_eq!(
            generate_synthetic_corpus(&spec).unwrap_err().kind(),
            "BadSpec"
        );
    }

    #[test]
    fn zero_difficulty_is_always_correct() {
        let mut spec = small_spec();
        spec.difficulty_profile = vec![DifficultyProfile::Constant { value: 0.0 }];
        let (corpus, _) = generate_synthetic_corpus(&spec).unwrap();
        let config = LearnerConfig {
            initial_skill: 0.05,
            ..LearnerConfig::default()
        };
        let state = ToyLearnerState::fresh(corpus.datasets().iter().cloned(), &config);
        for inst in corpus.instances() {
            assert!(state.confidence(&inst.dataset_id, 0.0) > 0.5);
            assert!(state.is_correct(&inst.dataset_id, 0.0));
        }
    }

    #[test]
    fn frozen_learner_keeps_initial_skill() {
        let (corpus, diff) = generate_synthetic_corpus(&small_spec()).unwrap();
        let config = LearnerConfig {
            learn_rate: 0.0,
            initial_skill: 0.3,
            ..LearnerConfig::default()
        };
        let order = TrainingOrder::heterogeneous(&corpus, 3, 1);
        let (state, _) = train_toy_learner(&order, &corpus, &diff, &config, None).unwrap();
        assert!(state.skill.values().all(|&s| s == 0.3));
    }

    #[test]
    fn frontier_update_is_a_quarter_of_the_rate() {
        let corpus = validate_corpus(vec![InstanceRef::new("x", "D")]).unwrap();
        let config = LearnerConfig {
            learn_rate: 0.2,
            initial_skill: 0.5,
            steepness: 37.0,
            ..LearnerConfig::default()
        };
        let order = TrainingOrder::from_passes(vec![vec![0]]);
        let before = ToyLearnerState::fresh(["D".to_string()], &config);
        assert_eq!(before.confidence("D", 0.5), 0.5);
        let (state, _) =
            train_toy_learner(&order, &corpus, &HiddenDifficulty(vec![0.5]), &config, None)
                .unwrap();
        assert!((state.skill["D"] - (0.5 + 0.25 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn training_is_deterministic() {
        let (corpus, diff) = generate_synthetic_corpus(&small_spec()).unwrap();
        let config = LearnerConfig::default();
        let order = TrainingOrder::heterogeneous(&corpus, 5, 9);
        let (_, a) = train_toy_learner(&order, &corpus, &diff, &config, None).unwrap();
        let (_, b) = train_toy_learner(&order, &corpus, &diff, &config, None).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn emitted_log_reingests_cleanly() {
        let (corpus, diff) = generate_synthetic_corpus(&small_spec()).unwrap();
        let order = TrainingOrder::heterogeneous(&corpus, 5, 9);
        let (_, log) =
            train_toy_learner(&order, &corpus, &diff, &LearnerConfig::default(), None).unwrap();
        let text = log.to_jsonl();
        let again = crate::corpus::ingest_confidence_log(text.lines(), &corpus).unwrap();
        assert_eq!(again, log);

        let (_, cross) = cross_review_log(&corpus, &diff, &LearnerConfig::default(), 3).unwrap();
        let text = cross.to_jsonl();
        assert_eq!(
            crate::corpus::ingest_confidence_log(text.lines(), &corpus).unwrap(),
            cross
        );
    }

    #[test]
    fn order_must_cover_corpus() {
        let (corpus, diff) = generate_synthetic_corpus(&small_spec()).unwrap();
        let order = TrainingOrder::from_passes(vec![vec![0, 1, 2]]);
        let err =
            train_toy_learner(&order, &corpus, &diff, &LearnerConfig::default(), None).unwrap_err();
        assert_eq!(err.kind(), "OrderCorpusMismatch");
        let order = TrainingOrder::from_passes(vec![(0..=corpus.len()).collect()]);
        let err =
            train_toy_learner(&order, &corpus, &diff, &LearnerConfig::default(), None).unwrap_err();
        assert_eq!(err.kind(), "OrderCorpusMismatch");
    }

    #[test]
    fn strategy_strings() {
        for s in [
            "heterogeneous",
            "distribution(3)+frac=0.4",
            "uniform(5)+frac=0",
            "dataset_level+frac=0.2",
        ] {
            let parsed: OrderingStrategy = s.parse().unwrap();
            assert_eq!(
                parsed.to_string().parse::<OrderingStrategy>().unwrap(),
                parsed
            );
        }
        assert_eq!(
            "uniform(3)".parse::<OrderingStrategy>().unwrap(),
            OrderingStrategy::Curriculum {
                split: SplitStrategy::Uniform(3),
                frac: 0.0
            }
        );
        assert!("distribution(3)+frac=2"
            .parse::<OrderingStrategy>()
            .is_err());
    }

    #[test]
    fn reports_share_buckets() {
        let strategies = [
            OrderingStrategy::Heterogeneous,
            "distribution(3)+frac=0.4".parse().unwrap(),
        ];
        let reports = run_experiment(
            &strategies,
            &small_spec(),
            &LearnerConfig::default(),
            &[1, 2],
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        let edges = |r: &ExperimentReport| {
            r.per_bucket_accuracy
                .iter()
                .map(|b| b.lower)
                .collect::<Vec<_>>()
        };
        assert_eq!(edges(&reports[0]), edges(&reports[1]));
        for r in &reports {
            let total: usize = r.per_bucket_accuracy.iter().map(|b| b.count).sum();
            assert_eq!(total, 2 * 3 * 50);
        }
    }
}
