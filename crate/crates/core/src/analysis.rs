//! Score distributions and per-difficulty comparisons between two runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bin_count, bin_index, bin_lower_edge, mean};
use crate::scoring::ScoredCorpus;
use crate::splitting::dataset_difficulty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Every bin covering [0, 1], including empty ones.
    pub bins: Vec<HistogramBin>,
    pub per_dataset_mean: BTreeMap<String, f64>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn count_at(&self, lower: f64) -> Option<usize> {
        self.bins
            .iter()
            .find(|b| (b.lower - lower).abs() < 1e-9)
            .map(|b| b.count)
    }

    /// Bins with at least one instance.
    pub fn nonzero(&self) -> Vec<(f64, usize)> {
        self.bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.lower, b.count))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for b in &self.bins {
            let upper = (b.lower + self.bin_width).min(1.0);
            let _ = writeln!(
                out,
                "{},{},{}",
                b.lower,
                bin_lower_edge_round(upper),
                b.count
            );
        }
        out
    }
}

fn bin_lower_edge_round(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Counts scores in half-open bins `[edge, edge + width)`, the last closed at 1.
pub fn score_histogram(scored: &ScoredCorpus, bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::BadBinWidth(bin_width));
    }
    let mut counts = vec![0usize; bin_count(bin_width)];
    for s in scored.scores() {
        counts[bin_index(s, bin_width)] += 1;
    }
    Ok(Histogram {
        bin_width,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                lower: bin_lower_edge(i, bin_width),
                count,
            })
            .collect(),
        per_dataset_mean: dataset_difficulty(scored),
    })
}

/// Share of instances with score ≤ `threshold`.
pub fn fraction_below(scored: &ScoredCorpus, threshold: f64) -> f64 {
    if scored.is_empty() {
        return 0.0;
    }
    let hits = scored.scores().filter(|&s| s <= threshold).count();
    hits as f64 / scored.len() as f64
}

/// One bucket of a per-difficulty metric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetric {
    pub bucket: f64,
    pub count: usize,
    /// `None` when the bucket is empty.
    pub metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket: f64,
    pub count_a: usize,
    pub count_b: usize,
    pub metric_a: Option<f64>,
    pub metric_b: Option<f64>,
    pub improvement: Option<f64>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub bucket_width: f64,
    pub rows: Vec<BucketRow>,
}

impl BucketReport {
    pub fn row(&self, bucket: f64) -> Option<&BucketRow> {
        self.rows.iter().find(|r| (r.bucket - bucket).abs() < 1e-9)
    }

    pub fn to_table(&self, label_a: &str, label_b: &str) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let header = ["bucket", "count", label_a, label_b, "improvement"];
        let rows: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    format!("{}", r.bucket),
                    r.count_a.to_string(),
                    fmt_opt(r.metric_a),
                    fmt_opt(r.metric_b),
                    r.improvement
                        .map_or_else(|| "-".to_string(), |v| format!("{v:+.2}")),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 5]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, header);
        for row in &rows {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
        }
        out
    }
}

/// Row-wise `B - A` over buckets that both runs share.
pub fn bucket_comparison(
    run_a: &[BucketMetric],
    run_b: &[BucketMetric],
    width: f64,
) -> Result<BucketReport> {
    if run_a.len() != run_b.len() {
        return Err(Error::BucketMismatch(format!(
            "{} buckets vs {} buckets",
            run_a.len(),
            run_b.len()
        )));
    }
    let mut rows = Vec::with_capacity(run_a.len());
    for (a, b) in run_a.iter().zip(run_b) {
        if (a.bucket - b.bucket).abs() > 1e-9 {
            return Err(Error::BucketMismatch(format!(
                "bucket {} does not line up with bucket {}",
                a.bucket, b.bucket
            )));
        }
        let improvement = match (a.metric, b.metric) {
            (Some(x), Some(y)) => Some(y - x),
            _ => None,
        };
        rows.push(BucketRow {
            bucket: a.bucket,
            count_a: a.count,
            count_b: b.count,
            metric_a: a.metric,
            metric_b: b.metric,
            improvement,
            empty: a.count == 0 || b.count == 0,
        });
    }
    Ok(BucketReport {
        bucket_width: width,
        rows,
    })
}

/// Unweighted mean over datasets of `B - A`.
pub fn macro_average_improvement(
    per_dataset_a: &BTreeMap<String, f64>,
    per_dataset_b: &BTreeMap<String, f64>,
) -> Result<f64> {
    if !per_dataset_a.keys().eq(per_dataset_b.keys()) {
        let only_a: Vec<_> = per_dataset_a
            .keys()
            .filter(|k| !per_dataset_b.contains_key(*k))
            .collect();
        let only_b: Vec<_> = per_dataset_b
            .keys()
            .filter(|k| !per_dataset_a.contains_key(*k))
            .collect();
        return Err(Error::KeyMismatch(format!(
            "only in A: {only_a:?}; only in B: {only_b:?}"
        )));
    }
    mean(per_dataset_a.iter().map(|(k, a)| per_dataset_b[k] - a))
        .ok_or_else(|| Error::KeyMismatch("no datasets to compare".into()))
}

/// One-sided exact sign test: probability of at least `wins` successes out of
/// `wins + losses` fair coin flips. Ties are expected to be dropped by the caller.
pub fn sign_test_p_value(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // log-space binomial coefficients keep this exact enough for n in the thousands
    let ln_choose = |k: usize| -> f64 {
        (1..=k)
            .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
            .sum()
    };
    let ln_half_n = n as f64 * 0.5f64.ln();
    (wins..=n)
        .map(|k| (ln_choose(k) + ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}
