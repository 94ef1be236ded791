use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oob::ScoreMatrix;

/// Per-point data values.
///
/// `psi[i]` is `NaN` exactly when `undefined[i]` is set (a point that was
/// in-bag for every learner). `oob_counts` is present for out-of-bag values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub psi: Vec<f64>,
    pub undefined: Vec<bool>,
    pub oob_counts: Option<Vec<u32>>,
}

impl ValueVector {
    /// Wraps values from a valuator with no notion of undefined points.
    pub fn from_values(psi: Vec<f64>) -> Self {
        let undefined = psi.iter().map(|v| v.is_nan()).collect();
        Self {
            psi,
            undefined,
            oob_counts: None,
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn undefined_count(&self) -> usize {
        self.undefined.iter().filter(|&&u| u).count()
    }

    /// Indices sorted by ascending value, undefined points first, ties by
    /// ascending index.
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let ua = self.undefined[a];
            let ub = self.undefined[b];
            ub.cmp(&ua)
                .then_with(|| {
                    if ua {
                        std::cmp::Ordering::Equal
                    } else {
                        self.psi[a].total_cmp(&self.psi[b])
                    }
                })
                .then(a.cmp(&b))
        });
        order
    }
}

/// Out-of-bag value of every training point: the mean score over learners
/// for which the point was out-of-bag. Rows are accumulated in ascending
/// learner order.
pub fn data_oob_values(sm: &ScoreMatrix) -> ValueVector {
    let n = sm.n();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for b in 0..sm.b() {
        sm.for_each_oob(b, |i, s| {
            sums[i] += s;
            counts[i] += 1;
        });
    }
    let psi = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / f64::from(c) } else { f64::NAN })
        .collect();
    ValueVector {
        psi,
        undefined: counts.iter().map(|&c| c == 0).collect(),
        oob_counts: Some(counts),
    }
}

/// Mean of the values, summed in ascending index order. Equal to the
/// classical out-of-bag estimate.
pub fn oob_estimate(v: &ValueVector) -> Result<f64> {
    if let Some(i) = v.undefined.iter().position(|&u| u) {
        return Err(Error::UndefinedValue(i));
    }
    if v.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    let mut total = 0.0;
    for &p in &v.psi {
        total += p;
    }
    Ok(total / v.len() as f64)
}

/// Normalized out-of-bag score of each bootstrap and their spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobScores {
    /// `q_b = (1/n) * sum_j 1(w_bj = 0) T(y_j, f_b(x_j))`; divides by `n`,
    /// not by the out-of-bag count.
    pub q: Vec<f64>,
    pub q_bar: f64,
    /// `(1/B) * sum_b (q_b - q_bar)^2`.
    pub v_b: f64,
}

pub fn oob_scores(sm: &ScoreMatrix) -> OobScores {
    let n = sm.n() as f64;
    let q: Vec<f64> = (0..sm.b())
        .map(|b| {
            let mut total = 0.0;
            sm.for_each_oob(b, |_, s| total += s);
            total / n
        })
        .collect();
    let bf = q.len() as f64;
    let q_bar = q.iter().sum::<f64>() / bf;
    let v_b = q.iter().map(|x| (x - q_bar) * (x - q_bar)).sum::<f64>() / bf;
    OobScores { q, q_bar, v_b }
}
