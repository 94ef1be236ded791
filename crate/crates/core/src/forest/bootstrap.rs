use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `B x n` matrix of bootstrap multiplicities; row `b` counts how often each
/// training point was drawn into the `b`-th bootstrap sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapWeights {
    n: usize,
    b: usize,
    counts: Vec<u32>,
}

impl BootstrapWeights {
    /// Builds from explicit rows. Every row must have length `n` and sum to `n`.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let b = rows.len();
        if b == 0 {
            return Err(Error::InvalidArgument("need at least one bootstrap row".into()));
        }
        let n = rows[0].len();
        let mut counts = Vec::with_capacity(b * n);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!("bootstrap row {k} has wrong length")));
            }
            let total: u64 = row.iter().map(|&c| u64::from(c)).sum();
            if total != n as u64 {
                return Err(Error::InvalidArgument(format!(
                    "bootstrap row {k} sums to {total}, expected {n}"
                )));
            }
            counts.extend(row);
        }
        Ok(Self { n, b, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn row(&self, b: usize) -> &[u32] {
        &self.counts[b * self.n..(b + 1) * self.n]
    }

    pub fn get(&self, b: usize, i: usize) -> u32 {
        self.counts[b * self.n + i]
    }

    pub fn is_oob(&self, b: usize, i: usize) -> bool {
        self.get(b, i) == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks(self.n)
    }
}

/// One multinomial(n, uniform) row: `n` uniform draws with replacement,
/// tallied. Deterministic per `(seed, b)`.
pub(crate) fn draw_row(n: usize, seed: u64, b: usize) -> Vec<u32> {
    let mut rng = stream_rng(seed, "bootstrap", b as u64);
    let mut row = vec![0u32; n];
    for _ in 0..n {
        row[rng.random_range(0..n)] += 1;
    }
    debug_assert_eq!(row.iter().map(|&c| c as usize).sum::<usize>(), n);
    row
}

pub fn draw_bootstrap_weights(n: usize, b: usize, seed: u64) -> Result<BootstrapWeights> {
    if n == 0 || b == 0 {
        return Err(Error::InvalidArgument("bootstrap needs n >= 1 and B >= 1".into()));
    }
    let mut counts = Vec::with_capacity(n * b);
    for k in 0..b {
        counts.extend(draw_row(n, seed, k));
    }
    Ok(BootstrapWeights { n, b, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_rows_are_one() {
        let w = draw_bootstrap_weights(1, 7, 3).unwrap();
        assert!(w.rows().all(|r| r == [1]));
    }

    #[test]
    fn rows_sum_to_n() {
        let w = draw_bootstrap_weights(37, 50, 1).unwrap();
        for row in w.rows() {
            assert_eq!(row.iter().sum::<u32>(), 37);
        }
    }

    #[test]
    fn oob_probability_matches_binomial() {
        let (n, b) = (100, 10_000);
        let w = draw_bootstrap_weights(n, b, 42).unwrap();
        let zeros = w.rows().flat_map(|r| r.iter()).filter(|&&c| c == 0).count();
        let empirical = zeros as f64 / (n * b) as f64;
        // exact P(w = 0) = (1 - 1/n)^n
        let exact = (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((exact - 0.366).abs() < 1e-3);
        assert!((empirical - exact).abs() < 0.015, "{empirical} vs {exact}");
    }

    #[test]
    fn from_rows_validates_sums() {
        assert!(BootstrapWeights::from_rows(vec![vec![0, 2], vec![2, 0]]).is_ok());
        assert!(BootstrapWeights::from_rows(vec![vec![1, 2]]).is_err());
        assert!(BootstrapWeights::from_rows(vec![vec![1, 1], vec![2]]).is_err());
    }

    #[test]
    fn rows_are_deterministic_per_index() {
        assert_eq!(draw_row(20, 5, 3), draw_bootstrap_weights(20, 4, 5).unwrap().row(3));
    }
}
