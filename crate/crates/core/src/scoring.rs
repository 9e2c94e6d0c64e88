//! Difficulty scores from confidence logs.
//!
//! Two scorers are provided. Cross review partitions the corpus into N
//! meta-datasets; each instance is scored by the N-1 models that never saw it.
//! Average confidence scores an instance by one model's confidence on the
//! correct answer averaged over E checkpoints. Both report
//! `1 - mean(confidence)`, so higher means harder.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    json_lines, push_json_line, ConfidenceLog, Corpus, InstanceRef, LogMode, LogRecords,
};
use crate::error::{Error, Result};
use crate::numeric::mean;
use crate::seed::rng_from;

/// Partition of the corpus into `n_meta` near-equal meta-datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaAssignment {
    corpus: Corpus,
    n_meta: usize,
    seed: u64,
    // 1-based meta index per corpus position
    metas: Vec<usize>,
}

impl MetaAssignment {
    pub fn n_meta(&self) -> usize {
        self.n_meta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn meta_of(&self, instance_id: &str) -> Option<usize> {
        self.corpus.position(instance_id).map(|p| self.metas[p])
    }

    /// Meta index per instance, in corpus order.
    pub fn metas(&self) -> &[usize] {
        &self.metas
    }

    /// Number of instances in each meta-dataset, indexed from meta 1.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_meta];
        for &m in &self.metas {
            sizes[m - 1] += 1;
        }
        sizes
    }

    /// Corpus positions belonging to meta-dataset `meta` (1-based), in corpus order.
    pub fn members(&self, meta: usize) -> Vec<usize> {
        self.metas
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == meta)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        push_json_line(
            &mut out,
            &AssignmentHeader {
                n_meta: self.n_meta,
                seed: self.seed,
            },
        );
        for (inst, &meta) in self.corpus.instances().iter().zip(&self.metas) {
            push_json_line(
                &mut out,
                &AssignmentLine {
                    instance_id: inst.instance_id.clone(),
                    dataset_id: inst.dataset_id.clone(),
                    meta,
                },
            );
        }
        out
    }

    pub fn parse(text: &str, source: &str, corpus: &Corpus) -> Result<Self> {
        let mut lines = json_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing header"))?;
        let header: AssignmentHeader =
            serde_json::from_str(header).map_err(|e| Error::parse(source, hl, e.to_string()))?;
        if header.n_meta < 2 {
            return Err(Error::BadN(header.n_meta));
        }
        let mut metas: Vec<Option<usize>> = vec![None; corpus.len()];
        for (line_no, line) in lines {
            let rec: AssignmentLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            let pos = corpus
                .position(&rec.instance_id)
                .ok_or_else(|| Error::UnknownInstance(rec.instance_id.clone()))?;
            if rec.meta < 1 || rec.meta > header.n_meta {
                return Err(Error::ShapeMismatch(format!(
                    "instance `{}` assigned to meta {} outside 1..={}",
                    rec.instance_id, rec.meta, header.n_meta
                )));
            }
            if metas[pos].replace(rec.meta).is_some() {
                return Err(Error::DuplicateRecord(rec.instance_id));
            }
        }
        let metas = metas
            .into_iter()
            .zip(corpus.instances())
            .map(|(m, inst)| m.ok_or_else(|| Error::MissingInstance(inst.instance_id.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            corpus: corpus.clone(),
            n_meta: header.n_meta,
            seed: header.seed,
            metas,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct AssignmentHeader {
    #[serde(rename = "N")]
    n_meta: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct AssignmentLine {
    instance_id: String,
    dataset_id: String,
    meta: usize,
}

/// Seeded uniform partition: Fisher-Yates shuffle of corpus order, then
/// contiguous chunks of size ⌈n/N⌉ for the first `n mod N` metas and ⌊n/N⌋
/// for the rest.
pub fn assign_meta_datasets(corpus: &Corpus, n_meta: usize, seed: u64) -> Result<MetaAssignment> {
    if n_meta < 2 {
        return Err(Error::BadN(n_meta));
    }
    let n = corpus.len();
    if n < n_meta {
        return Err(Error::TooFewInstances {
            instances: n,
            n_meta,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));

    let base = n / n_meta;
    let remainder = n % n_meta;
    let mut metas = vec![0usize; n];
    let mut cursor = 0;
    for meta in 1..=n_meta {
        let size = base + usize::from(meta <= remainder);
        for &pos in &order[cursor..cursor + size] {
            metas[pos] = meta;
        }
        cursor += size;
    }
    Ok(MetaAssignment {
        corpus: corpus.clone(),
        n_meta,
        seed,
        metas,
    })
}

/// A difficulty score in [0, 1]; higher is harder.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifficultyScore(pub f64);

impl DifficultyScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// How a set of scores was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    AverageConfidence { epochs: usize },
    CrossReview { n_meta: usize, seed: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::AverageConfidence { epochs } => write!(f, "average_confidence(E={epochs})"),
            Provenance::CrossReview { n_meta, seed } => {
                write!(f, "cross_review(N={n_meta}, seed={seed})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCorpus {
    corpus: Corpus,
    scores: Vec<DifficultyScore>,
    provenance: Provenance,
}

impl ScoredCorpus {
    /// `scores` are given in corpus order and must lie in [0, 1].
    pub fn new(corpus: Corpus, scores: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if scores.len() != corpus.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for {} instances",
                scores.len(),
                corpus.len()
            )));
        }
        for (inst, &s) in corpus.instances().iter().zip(&scores) {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::OutOfRange {
                    instance: inst.instance_id.clone(),
                    value: s,
                });
            }
        }
        Ok(Self {
            corpus,
            scores: scores.into_iter().map(DifficultyScore).collect(),
            provenance,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    /// Score per instance, in corpus order.
    pub fn scores(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.scores.iter().map(|s| s.0)
    }

    pub fn score_at(&self, position: usize) -> f64 {
        self.scores[position].0
    }

    pub fn score_of(&self, instance_id: &str) -> Option<f64> {
        self.corpus.position(instance_id).map(|p| self.scores[p].0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InstanceRef, f64)> {
        self.corpus.instances().iter().zip(self.scores())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = match self.provenance {
            Provenance::AverageConfidence { epochs } => ScoredHeader {
                method: "average_confidence".into(),
                epochs: Some(epochs),
                n_meta: None,
                seed: None,
            },
            Provenance::CrossReview { n_meta, seed } => ScoredHeader {
                method: "cross_review".into(),
                epochs: None,
                n_meta: Some(n_meta),
                seed: Some(seed),
            },
        };
        push_json_line(&mut out, &header);
        for (inst, score) in self.iter() {
            push_json_line(
                &mut out,
                &ScoredLine {
                    instance_id: inst.instance_id.clone(),
                    dataset_id: inst.dataset_id.clone(),
                    score,
                },
            );
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = json_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing header"))?;
        let header: ScoredHeader =
            serde_json::from_str(header).map_err(|e| Error::parse(source, hl, e.to_string()))?;
        let provenance = match (
            header.method.as_str(),
            header.epochs,
            header.n_meta,
            header.seed,
        ) {
            ("average_confidence", Some(epochs), _, _) => Provenance::AverageConfidence { epochs },
            ("cross_review", _, Some(n_meta), Some(seed)) => {
                Provenance::CrossReview { n_meta, seed }
            }
            _ => return Err(Error::parse(source, hl, "header provenance is incomplete")),
        };
        let mut instances = Vec::new();
        let mut scores = Vec::new();
        for (line_no, line) in lines {
            let rec: ScoredLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            instances.push(InstanceRef::new(rec.instance_id, rec.dataset_id));
            scores.push(rec.score);
        }
        let corpus = crate::corpus::validate_corpus(instances)?;
        Self::new(corpus, scores, provenance)
    }
}

#[derive(Serialize, Deserialize)]
struct ScoredHeader {
    method: String,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n_meta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ScoredLine {
    instance_id: String,
    dataset_id: String,
    score: f64,
}

/// `s_i = 1 - mean_{j != k} c_ji` for an instance in meta-dataset k.
pub fn cross_review_scores(
    assignment: &MetaAssignment,
    log: &ConfidenceLog,
) -> Result<ScoredCorpus> {
    let LogRecords::CrossReview(records) = log.records() else {
        return Err(Error::ModeMismatch {
            expected: "cross_review".into(),
            found: log.mode().to_string(),
        });
    };
    if log.mode()
        != (LogMode::CrossReview {
            n_meta: assignment.n_meta(),
        })
    {
        return Err(Error::ModeMismatch {
            expected: format!("cross_review(N={})", assignment.n_meta()),
            found: log.mode().to_string(),
        });
    }
    let mut scores = Vec::with_capacity(records.len());
    for rec in records {
        let id = &rec.instance.instance_id;
        let assigned = assignment
            .meta_of(id)
            .ok_or_else(|| Error::UnknownInstance(id.clone()))?;
        if assigned != rec.home_meta {
            return Err(Error::MetaMismatch {
                instance: id.clone(),
                declared: rec.home_meta,
                assigned,
            });
        }
        let avg = mean(rec.confidences.values().copied()).expect("N >= 2 leaves a foreign model");
        scores.push(1.0 - avg);
    }
    ScoredCorpus::new(
        log.corpus().clone(),
        scores,
        Provenance::CrossReview {
            n_meta: assignment.n_meta(),
            seed: assignment.seed(),
        },
    )
}

/// `s_i = 1 - mean_{j=1..E} c_ji`.
pub fn average_confidence_scores(log: &ConfidenceLog) -> Result<ScoredCorpus> {
    let (LogMode::AverageConfidence { epochs }, LogRecords::AverageConfidence(records)) =
        (log.mode(), log.records())
    else {
        return Err(Error::ModeMismatch {
            expected: "average_confidence".into(),
            found: log.mode().to_string(),
        });
    };
    let mut scores = Vec::with_capacity(records.len());
    for rec in records {
        if rec.confidences.len() != epochs {
            return Err(Error::ShapeMismatch(format!(
                "instance `{}` has {} confidences, expected E = {epochs}",
                rec.instance.instance_id,
                rec.confidences.len()
            )));
        }
        let avg = mean(rec.confidences.iter().copied())
            .ok_or_else(|| Error::ShapeMismatch("E must be at least 1".into()))?;
        scores.push(1.0 - avg);
    }
    ScoredCorpus::new(
        log.corpus().clone(),
        scores,
        Provenance::AverageConfidence { epochs },
    )
}
