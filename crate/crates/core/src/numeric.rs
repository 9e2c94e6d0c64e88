//! Small numeric helpers shared by the scorers, splitters and the simulator.

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Compensated arithmetic mean. Returns `None` for an empty input.
pub fn mean<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let mut n = 0usize;
    let sum = compensated_sum(values.into_iter().inspect(|_| n += 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// Absorbs representation error when a value sits on a bin edge, e.g. 0.3 / 0.1.
const EDGE_SLACK: f64 = 1e-9;

/// Number of half-open bins of `width` covering [0, 1].
pub fn bin_count(width: f64) -> usize {
    ((1.0 / width) - EDGE_SLACK).ceil().max(1.0) as usize
}

/// Bin index of `value` among `bin_count(width)` bins `[i*w, (i+1)*w)`,
/// with the last bin closed at 1.
pub fn bin_index(value: f64, width: f64) -> usize {
    let bins = bin_count(width);
    let idx = (value / width + EDGE_SLACK).floor();
    if idx <= 0.0 {
        0
    } else {
        (idx as usize).min(bins - 1)
    }
}

/// Lower edge of bin `index`, rounded to suppress accumulated float noise.
pub fn bin_lower_edge(index: usize, width: f64) -> f64 {
    ((index as f64 * width) * 1e9).round() / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(values), 1.0);
        assert_eq!(values.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn mean_of_empty_is_none() {
        assert_eq!(mean(std::iter::empty()), None);
        assert!((mean([0.2, 0.4, 0.6]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn binning_respects_edges() {
        assert_eq!(bin_count(0.1), 10);
        assert_eq!(bin_count(0.3), 4);
        assert_eq!(bin_count(1.0), 1);
        assert_eq!(bin_index(0.3, 0.1), 3);
        assert_eq!(bin_index(0.05, 0.1), 0);
        assert_eq!(bin_index(0.95, 0.1), 9);
        assert_eq!(bin_index(1.0, 0.1), 9);
        assert_eq!(bin_index(0.0, 0.1), 0);
        assert_eq!(bin_lower_edge(3, 0.1), 0.3);
    }

    #[test]
    fn logistic_midpoint() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(3.0) > logistic(2.0));
    }
}
