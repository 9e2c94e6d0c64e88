//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code paths it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use currier::corpus::{validate_corpus, ConfidenceLog, Corpus, EpochConfidenceRecord, InstanceRef};
use currier::scheduler::{Curriculum, Origin};
use currier::scoring::{Provenance, ScoredCorpus};
use currier::splitting::SplitPlan;
use rand::Rng;

/// Plain left-to-right summation of `1 - sum / count`.
pub fn direct_score(confidences: &[f64]) -> f64 {
    let mut total = 0.0;
    for c in confidences {
        total += c;
    }
    1.0 - total / confidences.len() as f64
}

pub fn random_corpus<R: Rng>(rng: &mut R, n: usize, datasets: usize) -> Corpus {
    validate_corpus(
        (0..n)
            .map(|i| {
                InstanceRef::new(
                    format!("inst-{i:05}"),
                    format!("ds{}", rng.random_range(0..datasets)),
                )
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_epoch_log<R: Rng>(rng: &mut R, corpus: &Corpus, epochs: usize) -> ConfidenceLog {
    let records = corpus
        .instances()
        .iter()
        .map(|inst| EpochConfidenceRecord {
            instance: inst.clone(),
            confidences: (0..epochs).map(|_| rng.random::<f64>()).collect(),
        })
        .collect();
    ConfidenceLog::average_confidence(corpus.clone(), epochs, records).unwrap()
}

pub fn scored_from(corpus: Corpus, scores: Vec<f64>) -> ScoredCorpus {
    ScoredCorpus::new(corpus, scores, Provenance::AverageConfidence { epochs: 1 }).unwrap()
}

fn enumerate_cuts(
    allowed: &[usize],
    from: usize,
    remaining: usize,
    cuts: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(cuts);
        return;
    }
    for i in from..allowed.len() {
        cuts.push(allowed[i]);
        enumerate_cuts(allowed, i + 1, remaining - 1, cuts, visit);
        cuts.pop();
    }
}

/// Expected composition of each stage under the general training structure:
/// stage i = S_i plus `replays(j)` members drawn from each S_j, j < i; then D.
pub struct ReferenceStage {
    pub fresh: HashSet<String>,
    pub replay_counts: BTreeMap<usize, usize>,
}

/// `frac_tenths` keeps the floor computation in integers: ⌊t·n / 10⌋.
pub fn reference_stages(plan: &SplitPlan, frac_tenths: usize) -> Vec<ReferenceStage> {
    let mut out = Vec::new();
    for i in 0..plan.splits.len() {
        let fresh = plan.splits[i]
            .members
            .iter()
            .map(|m| m.instance.instance_id.clone())
            .collect();
        let replay_counts = (0..i)
            .map(|j| (j + 1, frac_tenths * plan.splits[j].members.len() / 10))
            .collect();
        out.push(ReferenceStage {
            fresh,
            replay_counts,
        });
    }
    out
}

/// Checks a built curriculum against the reference composition. Returns a
/// description of the first disagreement.
pub fn check_against_reference(
    plan: &SplitPlan,
    curriculum: &Curriculum,
    frac_tenths: usize,
) -> Result<(), String> {
    let reference = reference_stages(plan, frac_tenths);
    if curriculum.stages.len() != reference.len() + 1 {
        return Err(format!(
            "{} stages, expected {}",
            curriculum.stages.len(),
            reference.len() + 1
        ));
    }
    let split_of: HashMap<&str, usize> = plan
        .splits
        .iter()
        .flat_map(|s| {
            s.members
                .iter()
                .map(move |m| (m.instance.instance_id.as_str(), s.index))
        })
        .collect();
    for (i, (stage, want)) in curriculum.stages.iter().zip(&reference).enumerate() {
        let mut seen = HashSet::new();
        let mut fresh = HashSet::new();
        let mut replays: BTreeMap<usize, usize> = BTreeMap::new();
        for m in &stage.members {
            let id = m.instance.instance_id.as_str();
            if !seen.insert(id) {
                return Err(format!("stage {} repeats {id}", i + 1));
            }
            let home = *split_of.get(id).ok_or_else(|| format!("unknown {id}"))?;
            match m.origin {
                Origin::Fresh => {
                    if home != i + 1 {
                        return Err(format!(
                            "stage {} marks {id} from split {home} as fresh",
                            i + 1
                        ));
                    }
                    fresh.insert(id.to_string());
                }
                Origin::ReplayFrom(j) => {
                    if j != home || j > i {
                        return Err(format!(
                            "stage {} replays {id} from {j}, home {home}",
                            i + 1
                        ));
                    }
                    *replays.entry(j).or_default() += 1;
                }
                Origin::Full => return Err(format!("stage {} contains a full-pass member", i + 1)),
            }
        }
        if fresh != want.fresh {
            return Err(format!(
                "stage {} does not contain its split exactly",
                i + 1
            ));
        }
        let want_replays: BTreeMap<usize, usize> = want
            .replay_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&j, &c)| (j, c))
            .collect();
        if replays != want_replays {
            return Err(format!(
                "stage {} replays {replays:?}, expected {want_replays:?}",
                i + 1
            ));
        }
    }
    let last = curriculum.stages.last().unwrap();
    let mut final_ids: Vec<&str> = last
        .members
        .iter()
        .map(|m| m.instance.instance_id.as_str())
        .collect();
    final_ids.sort_unstable();
    let mut all: Vec<&str> = split_of.keys().copied().collect();
    all.sort_unstable();
    if final_ids != all {
        return Err("final stage is not the full corpus".into());
    }
    Ok(())
}

/// Exact rational `num / den`, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Self {
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn lt(self, o: Ratio) -> bool {
        self.num * o.den < o.num * self.den
    }
}

/// Exact within-group sum of squared deviations for integer values:
/// (n·Σx² − (Σx)²) / n.
pub fn exact_group_cost(values: &[i64]) -> Ratio {
    let n = values.len() as i128;
    let s: i128 = values.iter().map(|&v| v as i128).sum();
    let q: i128 = values.iter().map(|&v| (v as i128) * (v as i128)).sum();
    Ratio::new(n * q - s * s, n)
}

/// Exhaustive minimum over contiguous k-partitions of sorted integers, exact.
pub fn exact_brute_force_min_cost(sorted: &[i64], k: usize, keep_ties: bool) -> Option<Ratio> {
    let n = sorted.len();
    let allowed: Vec<usize> = (1..n)
        .filter(|&c| !keep_ties || sorted[c - 1] != sorted[c])
        .collect();
    let mut best: Option<Ratio> = None;
    let mut cuts = Vec::with_capacity(k);
    enumerate_cuts(&allowed, 0, k - 1, &mut cuts, &mut |cuts| {
        let mut bounds = vec![0];
        bounds.extend_from_slice(cuts);
        bounds.push(n);
        let cost = bounds
            .windows(2)
            .map(|w| exact_group_cost(&sorted[w[0]..w[1]]))
            .fold(Ratio::new(0, 1), Ratio::add);
        if best.is_none_or(|b| cost.lt(b)) {
            best = Some(cost);
        }
    });
    best
}

/// Exact cost of a plan whose scores are multiples of `1 / scale`.
pub fn exact_plan_cost(plan: &SplitPlan, scale: f64) -> Ratio {
    plan.splits
        .iter()
        .map(|s| {
            let ints: Vec<i64> = s
                .members
                .iter()
                .map(|m| (m.score * scale).round() as i64)
                .collect();
            exact_group_cost(&ints)
        })
        .fold(Ratio::new(0, 1), Ratio::add)
}
