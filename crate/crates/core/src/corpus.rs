//! Corpus and confidence-log types, plus the JSON-lines formats they travel in.
//!
//! Only opaque ids flow through the engine. Instance content (text, labels)
//! stays with the trainer that produced the confidences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceRef {
    pub instance_id: String,
    pub dataset_id: String,
}

impl InstanceRef {
    pub fn new(instance_id: impl Into<String>, dataset_id: impl Into<String>) -> Self {
        Self {
            instance_id: instance_id.into(),
            dataset_id: dataset_id.into(),
        }
    }
}

/// A validated, ordered collection of instances.
///
/// The input order is kept as-is and is the canonical order used for
/// tie-breaking everywhere downstream.
#[derive(Debug, Clone)]
pub struct Corpus {
    instances: Vec<InstanceRef>,
    index: HashMap<String, usize>,
    datasets: BTreeSet<String>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.instances == other.instances
    }
}

impl Corpus {
    pub fn instances(&self) -> &[InstanceRef] {
        &self.instances
    }

    pub fn datasets(&self) -> &BTreeSet<String> {
        &self.datasets
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Position of `instance_id` in corpus order.
    pub fn position(&self, instance_id: &str) -> Option<usize> {
        self.index.get(instance_id).copied()
    }

    pub fn get(&self, instance_id: &str) -> Option<&InstanceRef> {
        self.position(instance_id).map(|i| &self.instances[i])
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            push_json_line(&mut out, inst);
        }
        out
    }
}

/// Checks corpus invariants and builds a [`Corpus`] in input order.
pub fn validate_corpus(instances: Vec<InstanceRef>) -> Result<Corpus> {
    if instances.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut index = HashMap::with_capacity(instances.len());
    let mut datasets = BTreeSet::new();
    for (pos, inst) in instances.iter().enumerate() {
        if inst.dataset_id.is_empty() {
            return Err(Error::EmptyDatasetId(inst.instance_id.clone()));
        }
        if index.insert(inst.instance_id.clone(), pos).is_some() {
            return Err(Error::DuplicateInstanceId(inst.instance_id.clone()));
        }
        datasets.insert(inst.dataset_id.clone());
    }
    Ok(Corpus {
        instances,
        index,
        datasets,
    })
}

/// Parses a corpus file: one `{"instance_id":..,"dataset_id":..}` per line.
pub fn parse_corpus(text: &str, source: &str) -> Result<Corpus> {
    let mut instances = Vec::new();
    for (line_no, line) in json_lines(text) {
        let inst: InstanceRef =
            serde_json::from_str(line).map_err(|e| Error::parse(source, line_no, e.to_string()))?;
        instances.push(inst);
    }
    validate_corpus(instances)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogMode {
    AverageConfidence { epochs: usize },
    CrossReview { n_meta: usize },
}

impl fmt::Display for LogMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogMode::AverageConfidence { epochs } => write!(f, "average_confidence(E={epochs})"),
            LogMode::CrossReview { n_meta } => write!(f, "cross_review(N={n_meta})"),
        }
    }
}

/// Confidence of the correct answer at each of E checkpoints of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochConfidenceRecord {
    pub instance: InstanceRef,
    pub confidences: Vec<f64>,
}

/// Confidences from the N-1 models that did not see the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfidenceRecord {
    pub instance: InstanceRef,
    /// 1-based index of the meta-dataset holding the instance.
    pub home_meta: usize,
    pub confidences: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogRecords {
    AverageConfidence(Vec<EpochConfidenceRecord>),
    CrossReview(Vec<CrossConfidenceRecord>),
}

/// Exactly one confidence record per corpus instance, stored in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceLog {
    corpus: Corpus,
    mode: LogMode,
    records: LogRecords,
}

impl ConfidenceLog {
    pub fn average_confidence(
        corpus: Corpus,
        epochs: usize,
        records: Vec<EpochConfidenceRecord>,
    ) -> Result<Self> {
        if epochs == 0 {
            return Err(Error::ShapeMismatch("E must be at least 1".into()));
        }
        let mut slots: Vec<Option<EpochConfidenceRecord>> = vec![None; corpus.len()];
        for rec in records {
            let pos = claim_slot(&corpus, &rec.instance, &slots)?;
            if rec.confidences.len() != epochs {
                return Err(Error::ShapeMismatch(format!(
                    "instance `{}` has {} confidences, expected E = {epochs}",
                    rec.instance.instance_id,
                    rec.confidences.len()
                )));
            }
            check_range(&rec.instance, rec.confidences.iter().copied())?;
            slots[pos] = Some(rec);
        }
        let records = fill_slots(&corpus, slots)?;
        Ok(Self {
            corpus,
            mode: LogMode::AverageConfidence { epochs },
            records: LogRecords::AverageConfidence(records),
        })
    }

    pub fn cross_review(
        corpus: Corpus,
        n_meta: usize,
        records: Vec<CrossConfidenceRecord>,
    ) -> Result<Self> {
        if n_meta < 2 {
            return Err(Error::BadN(n_meta));
        }
        let mut slots: Vec<Option<CrossConfidenceRecord>> = vec![None; corpus.len()];
        for rec in records {
            let pos = claim_slot(&corpus, &rec.instance, &slots)?;
            if rec.home_meta < 1 || rec.home_meta > n_meta {
                return Err(Error::ShapeMismatch(format!(
                    "instance `{}` has home_meta {} outside 1..={n_meta}",
                    rec.instance.instance_id, rec.home_meta
                )));
            }
            let expected = (1..=n_meta).filter(|&j| j != rec.home_meta);
            if !rec.confidences.keys().copied().eq(expected) {
                return Err(Error::ShapeMismatch(format!(
                    "instance `{}` must carry confidences for every meta model except {}",
                    rec.instance.instance_id, rec.home_meta
                )));
            }
            check_range(&rec.instance, rec.confidences.values().copied())?;
            slots[pos] = Some(rec);
        }
        let records = fill_slots(&corpus, slots)?;
        Ok(Self {
            corpus,
            mode: LogMode::CrossReview { n_meta },
            records: LogRecords::CrossReview(records),
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn mode(&self) -> LogMode {
        self.mode
    }

    pub fn records(&self) -> &LogRecords {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    /// Serializes to the JSON-lines log format, header first.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        match (&self.mode, &self.records) {
            (LogMode::AverageConfidence { epochs }, LogRecords::AverageConfidence(records)) => {
                push_json_line(&mut out, &LogHeader::average_confidence(*epochs));
                for r in records {
                    push_json_line(
                        &mut out,
                        &EpochLine {
                            instance_id: r.instance.instance_id.clone(),
                            dataset_id: r.instance.dataset_id.clone(),
                            confidences: r.confidences.clone(),
                        },
                    );
                }
            }
            (LogMode::CrossReview { n_meta }, LogRecords::CrossReview(records)) => {
                push_json_line(&mut out, &LogHeader::cross_review(*n_meta));
                for r in records {
                    push_json_line(
                        &mut out,
                        &CrossLine {
                            instance_id: r.instance.instance_id.clone(),
                            dataset_id: r.instance.dataset_id.clone(),
                            home_meta: r.home_meta,
                            confidences: r
                                .confidences
                                .iter()
                                .map(|(k, v)| (k.to_string(), *v))
                                .collect(),
                        },
                    );
                }
            }
            _ => unreachable!("mode and record kind are set together"),
        }
        out
    }
}

fn claim_slot<T>(corpus: &Corpus, instance: &InstanceRef, slots: &[Option<T>]) -> Result<usize> {
    let pos = corpus
        .position(&instance.instance_id)
        .ok_or_else(|| Error::UnknownInstance(instance.instance_id.clone()))?;
    if slots[pos].is_some() {
        return Err(Error::DuplicateRecord(instance.instance_id.clone()));
    }
    if corpus.instances()[pos].dataset_id != instance.dataset_id {
        return Err(Error::ShapeMismatch(format!(
            "instance `{}` is in dataset `{}` but the record says `{}`",
            instance.instance_id,
            corpus.instances()[pos].dataset_id,
            instance.dataset_id
        )));
    }
    Ok(pos)
}

fn fill_slots<T>(corpus: &Corpus, slots: Vec<Option<T>>) -> Result<Vec<T>> {
    slots
        .into_iter()
        .zip(corpus.instances())
        .map(|(slot, inst)| slot.ok_or_else(|| Error::MissingInstance(inst.instance_id.clone())))
        .collect()
}

fn check_range(instance: &InstanceRef, values: impl Iterator<Item = f64>) -> Result<()> {
    for value in values {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange {
                instance: instance.instance_id.clone(),
                value,
            });
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct LogHeader {
    mode: &'static str,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n_meta: Option<usize>,
}

impl LogHeader {
    fn average_confidence(epochs: usize) -> Self {
        Self {
            mode: "average_confidence",
            epochs: Some(epochs),
            n_meta: None,
        }
    }

    fn cross_review(n_meta: usize) -> Self {
        Self {
            mode: "cross_review",
            epochs: None,
            n_meta: Some(n_meta),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct EpochLine {
    instance_id: String,
    dataset_id: String,
    confidences: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CrossLine {
    instance_id: String,
    dataset_id: String,
    home_meta: usize,
    confidences: BTreeMap<String, f64>,
}

const LOG_SOURCE: &str = "<confidence log>";

/// Reads a confidence log: a header line declaring the mode and E or N,
/// then one record per corpus instance.
pub fn ingest_confidence_log<'a, I>(record_stream: I, corpus: &Corpus) -> Result<ConfidenceLog>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut lines = record_stream
        .into_iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(LOG_SOURCE, 1, "missing header record"))?;
    let header: Value = serde_json::from_str(header)
        .map_err(|e| Error::parse(LOG_SOURCE, header_line, e.to_string()))?;
    let mode = parse_header(&header, header_line)?;

    match mode {
        LogMode::AverageConfidence { epochs } => {
            let mut records = Vec::new();
            for (line_no, line) in lines {
                let rec: EpochLine = serde_json::from_str(line)
                    .map_err(|e| Error::parse(LOG_SOURCE, line_no, e.to_string()))?;
                records.push(EpochConfidenceRecord {
                    instance: InstanceRef::new(rec.instance_id, rec.dataset_id),
                    confidences: rec.confidences,
                });
            }
            ConfidenceLog::average_confidence(corpus.clone(), epochs, records)
        }
        LogMode::CrossReview { n_meta } => {
            let mut records = Vec::new();
            for (line_no, line) in lines {
                let rec: CrossLine = serde_json::from_str(line)
                    .map_err(|e| Error::parse(LOG_SOURCE, line_no, e.to_string()))?;
                let mut confidences = BTreeMap::new();
                for (key, value) in rec.confidences {
                    let j: usize = key.parse().map_err(|_| {
                        Error::ShapeMismatch(format!(
                            "instance `{}` has non-integer meta key `{key}`",
                            rec.instance_id
                        ))
                    })?;
                    if confidences.insert(j, value).is_some() {
                        return Err(Error::ShapeMismatch(format!(
                            "instance `{}` repeats meta key {j}",
                            rec.instance_id
                        )));
                    }
                }
                records.push(CrossConfidenceRecord {
                    instance: InstanceRef::new(rec.instance_id, rec.dataset_id),
                    home_meta: rec.home_meta,
                    confidences,
                });
            }
            ConfidenceLog::cross_review(corpus.clone(), n_meta, records)
        }
    }
}

fn parse_header(header: &Value, line: usize) -> Result<LogMode> {
    let field = |name: &str| -> Result<usize> {
        header
            .get(name)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::parse(LOG_SOURCE, line, format!("header lacks integer `{name}`")))
    };
    match header.get("mode").and_then(Value::as_str) {
        Some("average_confidence") => Ok(LogMode::AverageConfidence {
            epochs: field("E")?,
        }),
        Some("cross_review") => Ok(LogMode::CrossReview {
            n_meta: field("N")?,
        }),
        Some(other) => Err(Error::parse(
            LOG_SOURCE,
            line,
            format!("unknown mode `{other}`"),
        )),
        None => Err(Error::parse(LOG_SOURCE, line, "header lacks `mode`")),
    }
}

/// Non-blank lines of a JSON-lines document with their 1-based line numbers.
pub(crate) fn json_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn push_json_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("plain data always serializes"));
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus3() -> Corpus {
        validate_corpus(vec![
            InstanceRef::new("a", "D1"),
            InstanceRef::new("b", "D1"),
            InstanceRef::new("c", "D2"),
        ])
        .unwrap()
    }

    fn epoch_log(lines: &[&str]) -> Result<ConfidenceLog> {
        let mut all = vec![r#"{"mode":"average_confidence","E":5}"#];
        all.extend_from_slice(lines);
        ingest_confidence_log(all, &corpus3())
    }

    #[test]
    fn validate_corpus_collects_datasets() {
        let corpus = corpus3();
        assert_eq!(corpus.len(), 3);
        let ds: Vec<_> = corpus.datasets().iter().cloned().collect();
        assert_eq!(ds, vec!["D1", "D2"]);
        let ids: Vec<_> = corpus
            .instances()
            .iter()
            .map(|i| i.instance_id.as_str())
            .collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn validate_corpus_errors() {
        let dup = validate_corpus(vec![
            InstanceRef::new("a", "D1"),
            InstanceRef::new("a", "D2"),
        ]);
        assert!(matches!(dup, Err(Error::DuplicateInstanceId(id)) if id == "a"));
        assert!(matches!(validate_corpus(vec![]), Err(Error::EmptyCorpus)));
        let empty_ds = validate_corpus(vec![InstanceRef::new("a", "")]);
        assert!(matches!(empty_ds, Err(Error::EmptyDatasetId(_))));
    }

    #[test]
    fn ingest_well_formed_epoch_log() {
        let log = epoch_log(&[
            r#"{"instance_id":"c","dataset_id":"D2","confidences":[0.1,0.2,0.3,0.4,0.5]}"#,
            r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1,1,1,1]}"#,
            r#"{"instance_id":"b","dataset_id":"D1","confidences":[0.8,0.6,0.7,0.9,1.0]}"#,
        ])
        .unwrap();
        assert_eq!(log.mode(), LogMode::AverageConfidence { epochs: 5 });
        assert_eq!(log.len(), 3);
        let LogRecords::AverageConfidence(records) = log.records() else {
            panic!("wrong record kind");
        };
        // stored in corpus order, not file order
        assert_eq!(records[0].instance.instance_id, "a");
        assert_eq!(records[2].instance.instance_id, "c");
    }

    #[test]
    fn ingest_reports_missing_instance() {
        let err = epoch_log(&[
            r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1,1,1,1]}"#,
            r#"{"instance_id":"b","dataset_id":"D1","confidences":[1,1,1,1,1]}"#,
        ])
        .unwrap_err();
        assert!(matches!(err, Error::MissingInstance(id) if id == "c"));
    }

    #[test]
    fn ingest_reports_out_of_range() {
        let err =
            epoch_log(&[r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1.3,1,1,1]}"#])
                .unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value, .. } if value == 1.3));
    }

    #[test]
    fn ingest_reports_unknown_duplicate_and_shape() {
        let unknown =
            epoch_log(&[r#"{"instance_id":"z","dataset_id":"D1","confidences":[1,1,1,1,1]}"#]);
        assert_eq!(unknown.unwrap_err().kind(), "UnknownInstance");
        let dup = epoch_log(&[
            r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1,1,1,1]}"#,
            r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1,1,1,1]}"#,
        ]);
        assert_eq!(dup.unwrap_err().kind(), "DuplicateRecord");
        let short =
            epoch_log(&[r#"{"instance_id":"a","dataset_id":"D1","confidences":[1,1,1,1]}"#]);
        assert_eq!(short.unwrap_err().kind(), "ShapeMismatch");
    }

    #[test]
    fn ingest_cross_review_checks_key_set() {
        let corpus = validate_corpus(vec![InstanceRef::new("a", "D1")]).unwrap();
        let ok = ingest_confidence_log(
            [
                r#"{"mode":"cross_review","N":3}"#,
                r#"{"instance_id":"a","dataset_id":"D1","home_meta":1,"confidences":{"2":0.9,"3":0.7}}"#,
            ],
            &corpus,
        )
        .unwrap();
        assert_eq!(ok.mode(), LogMode::CrossReview { n_meta: 3 });

        let wrong_keys = ingest_confidence_log(
            [
                r#"{"mode":"cross_review","N":3}"#,
                r#"{"instance_id":"a","dataset_id":"D1","home_meta":1,"confidences":{"1":0.9,"3":0.7}}"#,
            ],
            &corpus,
        );
        assert_eq!(wrong_keys.unwrap_err().kind(), "ShapeMismatch");
    }

    #[test]
    fn header_must_name_a_mode() {
        let err = ingest_confidence_log([r#"{"E":5}"#], &corpus3()).unwrap_err();
        assert_eq!(err.kind(), "Parse");
    }
}
