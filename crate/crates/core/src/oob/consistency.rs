use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::oob::{InfluenceVector, OobScores, ValueVector};
use crate::rng::stream_rng;

/// Absolute slack added to the hypothesis gap so that pairs sitting on the
/// threshold up to rounding are not counted.
const GAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyOptions {
    /// Ordered pairs are enumerated exhaustively up to this many; beyond it
    /// this many pairs are sampled uniformly with replacement.
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            max_pairs: 1_000_000,
            seed: 0,
        }
    }
}

/// Outcome of checking "a large influence gap implies the same value order".
///
/// `hypothesis_pairs` and `violations` use the centered influence
/// (`InfluenceVector::psi_ij_centered`). The `verbatim_*` counts repeat the
/// check with the uncentered form for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `4 * sqrt(2) * sqrt(V_B)`.
    pub threshold: f64,
    pub pairs_examined: u64,
    pub sampled: bool,
    pub hypothesis_pairs: u64,
    pub violations: u64,
    pub verbatim_hypothesis_pairs: u64,
    pub verbatim_violations: u64,
}

impl ConsistencyReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

pub fn order_consistency_report(
    values: &ValueVector,
    influence: &InfluenceVector,
    scores: &OobScores,
    options: &ConsistencyOptions,
) -> ConsistencyReport {
    let threshold = 4.0 * std::f64::consts::SQRT_2 * scores.v_b.sqrt();
    let defined: Vec<usize> = (0..values.len()).filter(|&i| !values.undefined[i]).collect();
    let mut report = ConsistencyReport {
        threshold,
        pairs_examined: 0,
        sampled: false,
        hypothesis_pairs: 0,
        violations: 0,
        verbatim_hypothesis_pairs: 0,
        verbatim_violations: 0,
    };
    let m = defined.len();
    if m < 2 {
        return report;
    }

    let mut check = |i: usize, j: usize| {
        report.pairs_examined += 1;
        let ordered = values.psi[i] > values.psi[j];
        if influence.psi_ij_centered[i] - influence.psi_ij_centered[j] > threshold + GAP_SLACK {
            report.hypothesis_pairs += 1;
            report.violations += u64::from(!ordered);
        }
        if influence.psi_ij[i] - influence.psi_ij[j] > threshold + GAP_SLACK {
            report.verbatim_hypothesis_pairs += 1;
            report.verbatim_violations += u64::from(!ordered);
        }
    };

    let total = (m as u128) * (m as u128 - 1);
    if total <= options.max_pairs as u128 {
        for &i in &defined {
            for &j in &defined {
                if i != j {
                    check(i, j);
                }
            }
        }
    } else {
        let mut rng = stream_rng(options.seed, "consistency-pairs", 0);
        for _ in 0..options.max_pairs {
            let a = rng.random_range(0..m);
            let mut b = rng.random_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            check(defined[a], defined[b]);
        }
        report.sampled = true;
    }
    report
}
