//! Stage-by-stage training schedule built from a split plan.
//!
//! Stage i (for i = 1..K) trains on all of S_i together with a uniform sample of
//! ⌊frac·|S_j|⌋ instances from every earlier split S_j. A final stage covers the
//! full corpus. Each stage is shuffled so datasets are mixed within it.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{json_lines, push_json_line, InstanceRef};
use crate::error::{Error, Result};
use crate::seed::labeled_rng;
use crate::splitting::{Split, SplitPlan, SplitStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// First appearance of the instance, as a member of the stage's own split.
    Fresh,
    /// Replayed from the given earlier split (1-based).
    ReplayFrom(usize),
    /// Part of the closing full-corpus stage.
    Full,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Fresh => f.write_str("fresh"),
            Origin::ReplayFrom(j) => write!(f, "replay_from:{j}"),
            Origin::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh" => Ok(Origin::Fresh),
            "full" => Ok(Origin::Full),
            _ => s
                .strip_prefix("replay_from:")
                .and_then(|j| j.parse().ok())
                .map(Origin::ReplayFrom)
                .ok_or_else(|| Error::Config(format!("unknown origin `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMember {
    pub instance: InstanceRef,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// 1-based.
    pub index: usize,
    pub members: Vec<StageMember>,
}

impl Stage {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn origin_of(&self, instance_id: &str) -> Option<Origin> {
        self.members
            .iter()
            .find(|m| m.instance.instance_id == instance_id)
            .map(|m| m.origin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum {
    /// K split stages followed by the full-corpus stage.
    pub stages: Vec<Stage>,
    pub frac: f64,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl Curriculum {
    /// Every stage's members in training order.
    pub fn visit_order(&self) -> impl Iterator<Item = &InstanceRef> {
        self.stages
            .iter()
            .flat_map(|s| s.members.iter().map(|m| &m.instance))
    }

    /// Serializes the curriculum as a manifest. The output is a pure function
    /// of the curriculum.
    pub fn emit_manifest(&self) -> String {
        let mut out = String::new();
        push_json_line(
            &mut out,
            &ManifestHeader {
                stages: self.stages.len(),
                frac: self.frac,
                seed: self.seed,
                strategy: self.strategy.to_string(),
            },
        );
        for stage in &self.stages {
            for m in &stage.members {
                push_json_line(
                    &mut out,
                    &ManifestLine {
                        stage: stage.index,
                        instance_id: m.instance.instance_id.clone(),
                        dataset_id: m.instance.dataset_id.clone(),
                        origin: m.origin.to_string(),
                    },
                );
            }
        }
        out
    }

    pub fn parse_manifest(text: &str, source: &str) -> Result<Self> {
        let mut lines = json_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing header"))?;
        let header: ManifestHeader =
            serde_json::from_str(header).map_err(|e| Error::parse(source, hl, e.to_string()))?;
        check_frac(header.frac)?;
        let strategy: SplitStrategy = header.strategy.parse()?;
        let mut stages: Vec<Stage> = (1..=header.stages)
            .map(|index| Stage {
                index,
                members: Vec::new(),
            })
            .collect();
        for (line_no, line) in lines {
            let rec: ManifestLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            let stage = rec
                .stage
                .checked_sub(1)
                .and_then(|i| stages.get_mut(i))
                .ok_or_else(|| {
                    Error::parse(source, line_no, format!("stage {} out of range", rec.stage))
                })?;
            let origin = rec
                .origin
                .parse()
                .map_err(|e: Error| Error::parse(source, line_no, e.to_string()))?;
            stage.members.push(StageMember {
                instance: InstanceRef::new(rec.instance_id, rec.dataset_id),
                origin,
            });
        }
        for stage in &stages {
            let mut seen = HashSet::new();
            for m in &stage.members {
                if !seen.insert(m.instance.instance_id.as_str()) {
                    return Err(Error::DuplicateInstanceId(m.instance.instance_id.clone()));
                }
            }
        }
        Ok(Self {
            stages,
            frac: header.frac,
            seed: header.seed,
            strategy,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestHeader {
    stages: usize,
    frac: f64,
    seed: u64,
    strategy: String,
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    stage: usize,
    instance_id: String,
    dataset_id: String,
    origin: String,
}

fn check_frac(frac: f64) -> Result<()> {
    if (0.0..=1.0).contains(&frac) {
        Ok(())
    } else {
        Err(Error::BadFrac(frac))
    }
}

/// ⌊frac·n⌋, tolerant of products like 0.29 * 100 landing just below an integer.
pub fn replay_count(frac: f64, n: usize) -> usize {
    ((frac * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Uniform sample without replacement of ⌊frac·|split|⌋ members. The draw is
/// a pure function of `(seed, stage_index, split.index)`.
pub fn sample_previous(
    split: &Split,
    frac: f64,
    seed: u64,
    stage_index: usize,
) -> Result<Vec<InstanceRef>> {
    check_frac(frac)?;
    let take = replay_count(frac, split.len());
    if take == 0 {
        return Ok(Vec::new());
    }
    let mut rng = labeled_rng(
        seed,
        &format!("replay/stage={stage_index}/split={}", split.index),
    );
    let mut positions: Vec<usize> = (0..split.len()).collect();
    let (chosen, _) = positions.partial_shuffle(&mut rng, take);
    Ok(chosen
        .iter()
        .map(|&p| split.members[p].instance.clone())
        .collect())
}

pub fn build_curriculum(plan: &SplitPlan, frac: f64, seed: u64) -> Result<Curriculum> {
    check_frac(frac)?;
    if plan.splits.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = HashSet::new();
    for m in plan.members() {
        if !seen.insert(m.instance.instance_id.as_str()) {
            return Err(Error::DuplicateInstanceId(m.instance.instance_id.clone()));
        }
    }

    let k = plan.splits.len();
    let mut stages = Vec::with_capacity(k + 1);
    for (i, split) in plan.splits.iter().enumerate() {
        let stage_index = i + 1;
        let mut members: Vec<StageMember> = split
            .members
            .iter()
            .map(|m| StageMember {
                instance: m.instance.clone(),
                origin: Origin::Fresh,
            })
            .collect();
        for previous in &plan.splits[..i] {
            members.extend(
                sample_previous(previous, frac, seed, stage_index)?
                    .into_iter()
                    .map(|instance| StageMember {
                        instance,
                        origin: Origin::ReplayFrom(previous.index),
                    }),
            );
        }
        members.shuffle(&mut labeled_rng(
            seed,
            &format!("shuffle/stage={stage_index}"),
        ));
        stages.push(Stage {
            index: stage_index,
            members,
        });
    }

    let mut full: Vec<StageMember> = plan
        .members()
        .map(|m| StageMember {
            instance: m.instance.clone(),
            origin: Origin::Full,
        })
        .collect();
    full.shuffle(&mut labeled_rng(seed, &format!("shuffle/stage={}", k + 1)));
    stages.push(Stage {
        index: k + 1,
        members: full,
    });

    Ok(Curriculum {
        stages,
        frac,
        seed,
        strategy: plan.strategy,
    })
}
