use serde::{Deserialize, Serialize};

use crate::data::CorruptionRecord;
use crate::error::{Error, Result};
use crate::oob::ValueVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    /// Number of lowest-valued points flagged.
    pub k: usize,
    /// Value of the `k`-th lowest point (`NaN` for undefined values).
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    /// Trapezoidal area over recall, starting from `(0, precision at k = 1)`.
    pub auprc: f64,
    pub undefined_first: usize,
}

/// Flags the `k` lowest-valued points for every `k`, ties broken by index.
/// Undefined values rank lowest.
pub fn precision_recall_curve(values: &ValueVector, truth: &CorruptionRecord) -> Result<PrCurve> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let n = values.len();
    if let Some(&i) = truth.flipped_indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("flipped index {i} beyond {n} values")));
    }
    let undefined = values.undefined_count();
    if undefined > 0 {
        log::warn!("{undefined} undefined values ranked as most suspicious");
    }
    let flipped = truth.mask(n);
    let total = truth.flipped_indices.len() as f64;
    let mut hits = 0usize;
    let mut points = Vec::with_capacity(n);
    for (pos, i) in values.ascending_order().into_iter().enumerate() {
        hits += usize::from(flipped[i]);
        let k = pos + 1;
        points.push(PrPoint {
            k,
            threshold: values.psi[i],
            precision: hits as f64 / k as f64,
            recall: hits as f64 / total,
        });
    }
    let mut auprc = 0.0;
    let (mut r0, mut p0) = (0.0, points[0].precision);
    for p in &points {
        auprc += (p.recall - r0) * (p.precision + p0) / 2.0;
        r0 = p.recall;
        p0 = p.precision;
    }
    Ok(PrCurve {
        points,
        auprc,
        undefined_first: undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoMeans {
    /// Indices in the lower-mean cluster, ascending.
    pub low: Vec<usize>,
    /// Midpoint between the two clusters.
    pub boundary: Option<f64>,
    /// All values equal: no split exists.
    pub degenerate: bool,
}

/// Exact two-cluster k-means in one dimension: every split between distinct
/// consecutive sorted values is scored by total within-cluster sum of
/// squares and the smallest wins (ties go to the smaller lower cluster).
pub fn two_means_1d(values: &[f64]) -> Result<TwoMeans> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, available: n });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, column: 0 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mean = values.iter().sum::<f64>() / n as f64;
    let xs: Vec<f64> = order.iter().map(|&i| values[i] - mean).collect();
    let total: f64 = xs.iter().sum();
    let total_sq: f64 = xs.iter().map(|x| x * x).sum();

    let mut best: Option<(f64, usize)> = None;
    let (mut s, mut sq) = (0.0, 0.0);
    for split in 1..n {
        s += xs[split - 1];
        sq += xs[split - 1] * xs[split - 1];
        if values[order[split - 1]] == values[order[split]] {
            continue;
        }
        let left = split as f64;
        let right = (n - split) as f64;
        let wcss = (sq - s * s / left) + ((total_sq - sq) - (total - s) * (total - s) / right);
        if best.is_none_or(|(w, _)| wcss < w) {
            best = Some((wcss, split));
        }
    }
    Ok(match best {
        None => TwoMeans {
            low: Vec::new(),
            boundary: None,
            degenerate: true,
        },
        Some((_, split)) => {
            let mut low = order[..split].to_vec();
            low.sort_unstable();
            TwoMeans {
                low,
                boundary: Some((values[order[split - 1]] + values[order[split]]) / 2.0),
                degenerate: false,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub predicted: Vec<usize>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub boundary: Option<f64>,
    pub degenerate: bool,
}

/// Points in the lower two-means cluster are predicted mislabeled.
/// Undefined values are always predicted.
pub fn f1_detection(values: &ValueVector, truth: &CorruptionRecord) -> Result<DetectionResult> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let defined: Vec<usize> = (0..values.len()).filter(|&i| !values.undefined[i]).collect();
    let clusters = two_means_1d(&defined.iter().map(|&i| values.psi[i]).collect::<Vec<_>>())?;
    let mut predicted: Vec<usize> = (0..values.len()).filter(|&i| values.undefined[i]).collect();
    predicted.extend(clusters.low.iter().map(|&k| defined[k]));
    predicted.sort_unstable();

    let flipped = truth.mask(values.len());
    let tp = predicted.iter().filter(|&&i| flipped[i]).count() as f64;
    let precision = if predicted.is_empty() { 0.0 } else { tp / predicted.len() as f64 };
    let recall = tp / truth.flipped_indices.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(DetectionResult {
        predicted,
        precision,
        recall,
        f1,
        boundary: clusters.boundary,
        degenerate: clusters.degenerate,
    })
}
