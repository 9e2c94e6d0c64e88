//! Arranging a scored corpus into ordered splits S_1..S_K.
//!
//! Dataset-level plans make each source dataset one split, ordered by mean
//! difficulty. Instance-level plans ignore dataset boundaries: uniform plans cut
//! the score-sorted corpus into K near-equal pieces; distribution plans group
//! similar scores by exact 1-D k-means over the sorted scores.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{json_lines, push_json_line, InstanceRef};
use crate::error::{Error, Result};
use crate::numeric::mean;
use crate::scoring::ScoredCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMember {
    pub instance: InstanceRef,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// 1-based position in curriculum order.
    pub index: usize,
    pub members: Vec<ScoredMember>,
    pub mean_score: f64,
}

impl Split {
    fn new(index: usize, members: Vec<ScoredMember>) -> Self {
        let mean_score = mean(members.iter().map(|m| m.score)).expect("splits are never empty");
        Self {
            index,
            members,
            mean_score,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    DatasetLevel,
    Uniform(usize),
    Distribution(usize),
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitStrategy::DatasetLevel => f.write_str("dataset_level"),
            SplitStrategy::Uniform(k) => write!(f, "uniform({k})"),
            SplitStrategy::Distribution(k) => write!(f, "distribution({k})"),
        }
    }
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "dataset_level" {
            return Ok(SplitStrategy::DatasetLevel);
        }
        let bad = || Error::Config(format!("unknown split strategy `{s}`"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let k: usize = rest
            .strip_suffix(')')
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(bad)?;
        match name.trim() {
            "uniform" => Ok(SplitStrategy::Uniform(k)),
            "distribution" => Ok(SplitStrategy::Distribution(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub splits: Vec<Split>,
}

impl SplitPlan {
    pub fn k(&self) -> usize {
        self.splits.len()
    }

    pub fn total_len(&self) -> usize {
        self.splits.iter().map(Split::len).sum()
    }

    /// All members in split order.
    pub fn members(&self) -> impl Iterator<Item = &ScoredMember> {
        self.splits.iter().flat_map(|s| s.members.iter())
    }

    /// Total within-split sum of squared deviations from each split mean.
    pub fn within_split_cost(&self) -> f64 {
        self.splits
            .iter()
            .map(|s| {
                let m = s.members.iter().map(|x| x.score).sum::<f64>() / s.len() as f64;
                s.members
                    .iter()
                    .map(|x| (x.score - m) * (x.score - m))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        push_json_line(
            &mut out,
            &PlanHeader {
                strategy: self.strategy.to_string(),
                k: self.k(),
            },
        );
        for split in &self.splits {
            for m in &split.members {
                push_json_line(
                    &mut out,
                    &PlanLine {
                        split: split.index,
                        instance_id: m.instance.instance_id.clone(),
                        dataset_id: m.instance.dataset_id.clone(),
                        score: m.score,
                    },
                );
            }
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = json_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing header"))?;
        let header: PlanHeader =
            serde_json::from_str(header).map_err(|e| Error::parse(source, hl, e.to_string()))?;
        let strategy: SplitStrategy = header.strategy.parse()?;

        let mut groups: BTreeMap<usize, Vec<ScoredMember>> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();
        for (line_no, line) in lines {
            let rec: PlanLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            if !seen.insert(rec.instance_id.clone()) {
                return Err(Error::DuplicateInstanceId(rec.instance_id));
            }
            if rec.dataset_id.is_empty() {
                return Err(Error::EmptyDatasetId(rec.instance_id));
            }
            groups.entry(rec.split).or_default().push(ScoredMember {
                instance: InstanceRef::new(rec.instance_id, rec.dataset_id),
                score: rec.score,
            });
        }
        if groups.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !groups.keys().copied().eq(1..=groups.len()) || groups.len() != header.k {
            return Err(Error::parse(
                source,
                hl,
                format!(
                    "expected splits 1..={}, found {:?}",
                    header.k,
                    groups.keys().collect::<Vec<_>>()
                ),
            ));
        }
        let splits = groups.into_iter().map(|(i, m)| Split::new(i, m)).collect();
        Ok(Self { strategy, splits })
    }
}

#[derive(Serialize, Deserialize)]
struct PlanHeader {
    strategy: String,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct PlanLine {
    split: usize,
    instance_id: String,
    dataset_id: String,
    score: f64,
}

/// Mean difficulty `d_k` of each dataset.
pub fn dataset_difficulty(scored: &ScoredCorpus) -> BTreeMap<String, f64> {
    group_by_dataset(scored)
        .into_iter()
        .map(|(ds, members)| {
            let d = mean(members.iter().map(|m| m.score)).expect("datasets are non-empty");
            (ds, d)
        })
        .collect()
}

fn group_by_dataset(scored: &ScoredCorpus) -> BTreeMap<String, Vec<ScoredMember>> {
    let mut groups: BTreeMap<String, Vec<ScoredMember>> = BTreeMap::new();
    for (inst, score) in scored.iter() {
        groups
            .entry(inst.dataset_id.clone())
            .or_default()
            .push(ScoredMember {
                instance: inst.clone(),
                score,
            });
    }
    groups
}

/// One split per dataset, ordered by `d_k` with ties broken by dataset id.
pub fn dataset_level_splits(scored: &ScoredCorpus) -> Result<SplitPlan> {
    if scored.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut groups: Vec<(String, Split)> = group_by_dataset(scored)
        .into_iter()
        .map(|(ds, members)| (ds, Split::new(0, members)))
        .collect();
    groups.sort_by(|(da, a), (db, b)| {
        a.mean_score
            .total_cmp(&b.mean_score)
            .then_with(|| da.cmp(db))
    });
    let splits = groups
        .into_iter()
        .enumerate()
        .map(|(i, (_, mut s))| {
            s.index = i + 1;
            s
        })
        .collect();
    Ok(SplitPlan {
        strategy: SplitStrategy::DatasetLevel,
        splits,
    })
}

fn by_score_then_id(a: &ScoredMember, b: &ScoredMember) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| a.instance.instance_id.cmp(&b.instance.instance_id))
        .then_with(|| a.instance.dataset_id.cmp(&b.instance.dataset_id))
}

fn sorted_members(scored: &ScoredCorpus) -> Vec<ScoredMember> {
    let mut members: Vec<ScoredMember> = scored
        .iter()
        .map(|(inst, score)| ScoredMember {
            instance: inst.clone(),
            score,
        })
        .collect();
    members.sort_by(by_score_then_id);
    members
}

fn cut(members: Vec<ScoredMember>, sizes: &[usize]) -> Vec<Split> {
    let mut rest = members.into_iter();
    sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| Split::new(i + 1, rest.by_ref().take(size).collect()))
        .collect()
}

/// K contiguous splits of the score-sorted corpus; sizes differ by at most
/// one, with the remainder going to the earliest splits.
pub fn uniform_splits(scored: &ScoredCorpus, k: usize) -> Result<SplitPlan> {
    let n = scored.len();
    if k < 1 || k > n {
        return Err(Error::BadK {
            k,
            reason: format!("uniform splitting needs 1 <= k <= {n}"),
        });
    }
    let sizes: Vec<usize> = (0..k).map(|i| n / k + usize::from(i < n % k)).collect();
    Ok(SplitPlan {
        strategy: SplitStrategy::Uniform(k),
        splits: cut(sorted_members(scored), &sizes),
    })
}

/// Optimal contiguous K-partition of the sorted scores minimizing the total
/// within-split sum of squared deviations. Equal scores are never separated.
pub fn distribution_splits(scored: &ScoredCorpus, k: usize) -> Result<SplitPlan> {
    let n = scored.len();
    if k < 2 || k > n {
        return Err(Error::BadK {
            k,
            reason: format!("distribution splitting needs 2 <= k <= {n}"),
        });
    }
    let members = sorted_members(scored);

    // runs of identical scores: (value, multiplicity)
    let mut runs: Vec<(f64, usize)> = Vec::new();
    for m in &members {
        match runs.last_mut() {
            Some((v, c)) if *v == m.score => *c += 1,
            _ => runs.push((m.score, 1)),
        }
    }
    if runs.len() < k {
        return Err(Error::DegenerateScores {
            distinct: runs.len(),
            k,
        });
    }

    let run_groups = optimal_run_partition(&runs, k);
    let sizes: Vec<usize> = run_groups
        .iter()
        .map(|&(lo, hi)| runs[lo..hi].iter().map(|r| r.1).sum())
        .collect();
    Ok(SplitPlan {
        strategy: SplitStrategy::Distribution(k),
        splits: cut(members, &sizes),
    })
}

/// Weighted 1-D k-means over sorted distinct values by dynamic programming.
/// Returns `k` half-open run ranges in ascending order.
#[allow(clippy::needless_range_loop)]
fn optimal_run_partition(runs: &[(f64, usize)], k: usize) -> Vec<(usize, usize)> {
    let m = runs.len();
    let total_w: f64 = runs.iter().map(|r| r.1 as f64).sum();
    let center = runs.iter().map(|r| r.0 * r.1 as f64).sum::<f64>() / total_w;

    // prefix sums of weight, weighted centered value and its square
    let mut pw = vec![0.0; m + 1];
    let mut p1 = vec![0.0; m + 1];
    let mut p2 = vec![0.0; m + 1];
    for (i, &(v, c)) in runs.iter().enumerate() {
        let w = c as f64;
        let x = v - center;
        pw[i + 1] = pw[i] + w;
        p1[i + 1] = p1[i] + w * x;
        p2[i + 1] = p2[i] + w * x * x;
    }
    // cost of grouping runs[lo..hi]
    let cost = |lo: usize, hi: usize| -> f64 {
        let w = pw[hi] - pw[lo];
        let s1 = p1[hi] - p1[lo];
        let s2 = p2[hi] - p2[lo];
        (s2 - s1 * s1 / w).max(0.0)
    };

    // best[c][j]: optimal cost of the first j runs in c + 1 groups
    let mut best = vec![vec![f64::INFINITY; m + 1]; k];
    let mut back = vec![vec![0usize; m + 1]; k];
    for j in 1..=m {
        best[0][j] = cost(0, j);
    }
    for c in 1..k {
        for j in (c + 1)..=m {
            let mut best_cost = f64::INFINITY;
            let mut best_cut = c;
            for cut in c..j {
                let candidate = best[c - 1][cut] + cost(cut, j);
                if candidate < best_cost {
                    best_cost = candidate;
                    best_cut = cut;
                }
            }
            best[c][j] = best_cost;
            back[c][j] = best_cut;
        }
    }

    let mut ranges = Vec::with_capacity(k);
    let mut hi = m;
    for c in (0..k).rev() {
        let lo = if c == 0 { 0 } else { back[c][hi] };
        ranges.push((lo, hi));
        hi = lo;
    }
    ranges.reverse();
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate_corpus;
    use crate::scoring::Provenance;

    pub(crate) fn scored(entries: &[(&str, &str, f64)]) -> ScoredCorpus {
        let corpus = validate_corpus(
            entries
                .iter()
                .map(|(id, ds, _)| InstanceRef::new(*id, *ds))
                .collect(),
        )
        .unwrap();
        ScoredCorpus::new(
            corpus,
            entries.iter().map(|e| e.2).collect(),
            Provenance::AverageConfidence { epochs: 5 },
        )
        .unwrap()
    }

    fn ids(split: &Split) -> Vec<&str> {
        split
            .members
            .iter()
            .map(|m| m.instance.instance_id.as_str())
            .collect()
    }

    fn order(plan: &SplitPlan) -> Vec<&str> {
        plan.splits
            .iter()
            .map(|s| s.members[0].instance.dataset_id.as_str())
            .collect()
    }

    #[test]
    fn dataset_difficulty_means() {
        let s = scored(&[("a", "D", 0.2), ("b", "D", 0.4), ("c", "D", 0.6)]);
        let d = dataset_difficulty(&s);
        assert!((d["D"] - 0.4).abs() < 1e-15);

        let s = scored(&[("a", "Z", 0.0), ("b", "Z", 0.0)]);
        assert_eq!(dataset_difficulty(&s)["Z"], 0.0);

        let s = scored(&[("a", "D1", 0.1), ("b", "D2", 0.9)]);
        let d = dataset_difficulty(&s);
        assert_eq!((d["D1"], d["D2"]), (0.1, 0.9));
    }

    #[test]
    fn dataset_level_orders_by_mean_then_name() {
        let s = scored(&[("a", "A", 0.5), ("b", "B", 0.2), ("c", "C", 0.8)]);
        assert_eq!(
            order(&dataset_level_splits(&s).unwrap()),
            vec!["B", "A", "C"]
        );

        let s = scored(&[("b", "B", 0.5), ("a", "A", 0.5)]);
        assert_eq!(order(&dataset_level_splits(&s).unwrap()), vec!["A", "B"]);

        let s = scored(&[("a", "A", 0.5), ("b", "A", 0.1), ("c", "A", 0.3)]);
        let plan = dataset_level_splits(&s).unwrap();
        assert_eq!(plan.k(), 1);
        assert_eq!(ids(&plan.splits[0]), vec!["a", "b", "c"]);
    }

    #[test]
    fn uniform_cuts_sorted_order() {
        let entries: Vec<(String, f64)> = (0..9)
            .map(|i| (format!("x{i}"), ((i * 7) % 9) as f64 / 10.0))
            .collect();
        let refs: Vec<(&str, &str, f64)> = entries
            .iter()
            .map(|(id, s)| (id.as_str(), "D", *s))
            .collect();
        let plan = uniform_splits(&scored(&refs), 3).unwrap();
        assert_eq!(
            plan.splits.iter().map(Split::len).collect::<Vec<_>>(),
            vec![3, 3, 3]
        );
        for pair in plan.splits.windows(2) {
            let max = pair[0]
                .members
                .iter()
                .map(|m| m.score)
                .fold(f64::MIN, f64::max);
            let min = pair[1]
                .members
                .iter()
                .map(|m| m.score)
                .fold(f64::MAX, f64::min);
            assert!(max <= min);
        }
        let scores: Vec<f64> = plan.members().map(|m| m.score).collect();
        assert_eq!(scores, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
    }

    #[test]
    fn uniform_k_bounds() {
        let s = scored(&[("a", "D", 0.3), ("b", "D", 0.1)]);
        let one = uniform_splits(&s, 1).unwrap();
        assert_eq!(one.k(), 1);
        assert_eq!(one.total_len(), 2);
        let five = scored(&[
            ("a", "D", 0.1),
            ("b", "D", 0.2),
            ("c", "D", 0.3),
            ("d", "D", 0.4),
            ("e", "D", 0.5),
        ]);
        assert!(matches!(
            uniform_splits(&five, 7),
            Err(Error::BadK { k: 7, .. })
        ));
        assert!(matches!(
            uniform_splits(&five, 0),
            Err(Error::BadK { k: 0, .. })
        ));
    }

    #[test]
    fn uniform_remainder_goes_first() {
        let s = scored(&[
            ("a", "D", 0.1),
            ("b", "D", 0.2),
            ("c", "D", 0.3),
            ("d", "D", 0.4),
            ("e", "D", 0.5),
        ]);
        let plan = uniform_splits(&s, 3).unwrap();
        assert_eq!(
            plan.splits.iter().map(Split::len).collect::<Vec<_>>(),
            vec![2, 2, 1]
        );
    }

    #[test]
    fn distribution_groups_clusters() {
        let s = scored(&[
            ("a", "D", 0.10),
            ("b", "D", 0.11),
            ("c", "D", 0.12),
            ("d", "D", 0.90),
            ("e", "D", 0.91),
        ]);
        let plan = distribution_splits(&s, 2).unwrap();
        assert_eq!(ids(&plan.splits[0]), vec!["a", "b", "c"]);
        assert_eq!(ids(&plan.splits[1]), vec!["d", "e"]);
    }

    #[test]
    fn distribution_never_separates_equal_scores() {
        // plain k-means on 6 points would cut the run of 0.5s
        let s = scored(&[
            ("a", "D", 0.0),
            ("b", "D", 0.5),
            ("c", "D", 0.5),
            ("d", "D", 0.5),
            ("e", "D", 0.5),
            ("f", "D", 1.0),
        ]);
        let plan = distribution_splits(&s, 3).unwrap();
        for split in &plan.splits {
            let has_half = split.members.iter().any(|m| m.score == 0.5);
            if has_half {
                assert_eq!(split.members.iter().filter(|m| m.score == 0.5).count(), 4);
            }
        }
    }

    #[test]
    fn distribution_errors() {
        let s = scored(&[("a", "D", 0.4), ("b", "D", 0.4), ("c", "D", 0.4)]);
        assert!(matches!(
            distribution_splits(&s, 2),
            Err(Error::DegenerateScores { distinct: 1, k: 2 })
        ));
        assert!(matches!(
            distribution_splits(&s, 1),
            Err(Error::BadK { .. })
        ));
        assert!(matches!(
            distribution_splits(&s, 4),
            Err(Error::BadK { .. })
        ));
    }

    #[test]
    fn strategy_strings() {
        for s in [
            SplitStrategy::DatasetLevel,
            SplitStrategy::Uniform(3),
            SplitStrategy::Distribution(5),
        ] {
            assert_eq!(s.to_string().parse::<SplitStrategy>().unwrap(), s);
        }
        assert!("quantile(3)".parse::<SplitStrategy>().is_err());
    }

    #[test]
    fn plan_file_round_trips() {
        let s = scored(&[
            ("a", "D1", 0.10),
            ("b", "D2", 0.11),
            ("c", "D1", 0.12),
            ("d", "D2", 0.90),
            ("e", "D1", 0.91),
        ]);
        for plan in [
            distribution_splits(&s, 2).unwrap(),
            uniform_splits(&s, 3).unwrap(),
            dataset_level_splits(&s).unwrap(),
        ] {
            assert_eq!(SplitPlan::parse(&plan.to_jsonl(), "mem").unwrap(), plan);
        }
    }
}
