use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::BootstrapWeights;
use crate::oob::{oob_estimate, OobScores, ValueVector};

/// Infinitesimal-jackknife influence of each training point on the
/// out-of-bag estimate `h`.
///
/// `psi_ij[i] = first[i] + second[i]` with
///
/// ```text
/// first[i]  = (2 + 1/(n-1)) * (psi_i - h) / n
/// second[i] = (1 - 1/n)^(-n) * (1/B) * sum_b (w_bi - 1) * q_b
/// ```
///
/// The `*_centered` fields replace `q_b` with `q_b - q_bar`. The two forms
/// coincide in expectation over bootstraps, and for any pair of points whose
/// weight columns have equal sums, but differ by
/// `(1 - 1/n)^(-n) * q_bar * mean_b(w_bi - 1)` at finite `B`. Only the
/// centered form is bounded by the spread of `q_b`, which is what the
/// order-consistency guarantee relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceVector {
    pub h: f64,
    /// `(1 - 1/n)^(-n)`.
    pub k: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub second_centered: Vec<f64>,
    pub psi_ij: Vec<f64>,
    pub psi_ij_centered: Vec<f64>,
}

impl InfluenceVector {
    pub fn len(&self) -> usize {
        self.psi_ij.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi_ij.is_empty()
    }
}

fn first_coefficient(n: usize) -> f64 {
    (2.0 + 1.0 / (n as f64 - 1.0)) / n as f64
}

fn k_factor(n: usize) -> f64 {
    let nf = n as f64;
    (1.0 - 1.0 / nf).powf(-nf)
}

pub fn infinitesimal_jackknife(
    weights: &BootstrapWeights,
    values: &ValueVector,
    scores: &OobScores,
) -> Result<InfluenceVector> {
    let n = weights.n();
    let b = weights.b();
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, available: n });
    }
    if values.len() != n || scores.q.len() != b {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: {n} points and {b} bootstraps, got {} values and {} scores",
            values.len(),
            scores.q.len()
        )));
    }
    let h = oob_estimate(values)?;
    let k = k_factor(n);
    let c = first_coefficient(n);

    let mut raw = vec![0.0; n];
    let mut centered = vec![0.0; n];
    for (row, &q) in weights.rows().zip(&scores.q) {
        let dq = q - scores.q_bar;
        for ((r, cen), &w) in raw.iter_mut().zip(centered.iter_mut()).zip(row) {
            let dw = f64::from(w) - 1.0;
            *r += dw * q;
            *cen += dw * dq;
        }
    }
    let bf = b as f64;
    let first: Vec<f64> = values.psi.iter().map(|&p| c * (p - h)).collect();
    let second: Vec<f64> = raw.iter().map(|s| k * s / bf).collect();
    let second_centered: Vec<f64> = centered.iter().map(|s| k * s / bf).collect();
    let psi_ij = first.iter().zip(&second).map(|(a, s)| a + s).collect();
    let psi_ij_centered = first.iter().zip(&second_centered).map(|(a, s)| a + s).collect();
    Ok(InfluenceVector {
        h,
        k,
        first,
        second,
        second_centered,
        psi_ij,
        psi_ij_centered,
    })
}

/// Terms of `psi_ij[i] - psi_ij[j]` recomputed from the weights directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseTerms {
    /// `(2 + 1/(n-1)) * (psi_i - psi_j) / n`.
    pub first: f64,
    /// `K * (1/B) * sum_b (w_bi - w_bj) * q_b`.
    pub second: f64,
    /// `(1/B) * sum_b (w_bi - w_bj) * (q_b - q_bar)`, without the `K` factor.
    pub centered_mean: f64,
    /// `sqrt((1/B) * sum_b (w_bi - w_bj)^2) * sqrt(V_B)`, an upper bound on
    /// `|centered_mean|`.
    pub cs_bound: f64,
}

impl PairwiseTerms {
    pub fn difference(&self) -> f64 {
        self.first + self.second
    }

    /// `first + K * centered_mean`, the pairwise difference of the centered
    /// influence.
    pub fn centered_difference(&self, k: f64) -> f64 {
        self.first + k * self.centered_mean
    }
}

pub fn pairwise_decomposition(
    weights: &BootstrapWeights,
    values: &ValueVector,
    scores: &OobScores,
    i: usize,
    j: usize,
) -> Result<PairwiseTerms> {
    let n = weights.n();
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, available: n });
    }
    for p in [i, j] {
        if p >= n {
            return Err(Error::InvalidArgument(format!("point {p} out of range")));
        }
        if values.undefined[p] {
            return Err(Error::UndefinedValue(p));
        }
    }
    let bf = weights.b() as f64;
    let mut raw = 0.0;
    let mut centered = 0.0;
    let mut sq = 0.0;
    for (row, &q) in weights.rows().zip(&scores.q) {
        let d = f64::from(row[i]) - f64::from(row[j]);
        raw += d * q;
        centered += d * (q - scores.q_bar);
        sq += d * d;
    }
    Ok(PairwiseTerms {
        first: first_coefficient(n) * (values.psi[i] - values.psi[j]),
        second: k_factor(n) * raw / bf,
        centered_mean: centered / bf,
        cs_bound: (sq / bf).sqrt() * scores.v_b.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(rows: Vec<Vec<u32>>, psi: Vec<f64>, q: Vec<f64>) -> (BootstrapWeights, ValueVector, OobScores) {
        let w = BootstrapWeights::from_rows(rows).unwrap();
        let bf = q.len() as f64;
        let q_bar = q.iter().sum::<f64>() / bf;
        let v_b = q.iter().map(|x| (x - q_bar).powi(2)).sum::<f64>() / bf;
        (w, ValueVector::from_values(psi), OobScores { q, q_bar, v_b })
    }

    #[test]
    fn two_point_hand_algebra() {
        // w = ((0,2),(2,0)); learner 0 gets point 0 right, learner 1 gets
        // point 1 wrong. psi = (1, 0), h = 1/2, q = (1/2, 0), K = 4.
        // first = 3 * (+-1/2) / 2 = +-3/4
        // second_0 = 4 * ((-1)(1/2) + (1)(0)) / 2 = -1, second_1 = +1
        let (w, v, s) = setup(vec![vec![0, 2], vec![2, 0]], vec![1.0, 0.0], vec![0.5, 0.0]);
        let inf = infinitesimal_jackknife(&w, &v, &s).unwrap();
        assert_eq!(inf.k, 4.0);
        assert_eq!(inf.first, vec![0.75, -0.75]);
        assert_eq!(inf.second, vec![-1.0, 1.0]);
        assert_eq!(inf.psi_ij, vec![-0.25, 0.25]);
        assert_eq!(inf.psi_ij_centered, vec![-0.25, 0.25]);
    }

    #[test]
    fn unit_weights_at_the_mean_have_zero_influence() {
        let (w, v, s) = setup(
            vec![vec![1, 0, 2], vec![1, 2, 0], vec![1, 1, 1]],
            vec![0.5, 0.25, 0.75],
            vec![0.3, 0.1, 0.0],
        );
        let inf = infinitesimal_jackknife(&w, &v, &s).unwrap();
        assert_eq!(inf.psi_ij[0], 0.0);
        assert_eq!(inf.psi_ij_centered[0], 0.0);
    }

    #[test]
    fn rejects_single_point_and_undefined() {
        let (w, v, s) = setup(vec![vec![1]], vec![1.0], vec![0.0]);
        assert!(matches!(
            infinitesimal_jackknife(&w, &v, &s),
            Err(Error::InsufficientRows { .. })
        ));
        let (w, v, s) = setup(vec![vec![2, 0]], vec![f64::NAN, 1.0], vec![0.5]);
        assert!(matches!(infinitesimal_jackknife(&w, &v, &s), Err(Error::UndefinedValue(0))));
        assert!(matches!(pairwise_decomposition(&w, &v, &s, 0, 1), Err(Error::UndefinedValue(0))));
    }

    #[test]
    fn centered_and_raw_agree_on_equal_column_sums() {
        // both columns sum to 3
        let (w, v, s) = setup(
            vec![vec![0, 3, 0], vec![3, 0, 0], vec![0, 0, 3]],
            vec![0.2, 0.4, 0.9],
            vec![0.7, 0.1, 0.4],
        );
        let inf = infinitesimal_jackknife(&w, &v, &s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = inf.psi_ij[i] - inf.psi_ij[j];
                let b = inf.psi_ij_centered[i] - inf.psi_ij_centered[j];
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
