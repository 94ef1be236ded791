use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;

/// Per-feature mean and population standard deviation of the data the
/// transform was fit on. A zero scale marks a constant column, which maps to
/// all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(ds: &TabularDataset) -> Self {
        let n = ds.n_rows();
        let d = ds.n_features();
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        if n == 0 {
            return Self { mean, scale };
        }
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(ds.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for i in 0..n {
            for ((s, m), v) in scale.iter_mut().zip(&mean).zip(ds.row(i)) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, m) in scale.iter_mut().zip(&mean) {
            let sd = (*s / n as f64).sqrt();
            // relative cut-off so that columns equal up to rounding count as constant
            *s = if sd <= 1e-12 * m.abs().max(1.0) { 0.0 } else { sd };
        }
        Self { mean, scale }
    }

    pub fn apply(&self, ds: &TabularDataset) -> TabularDataset {
        let d = ds.n_features();
        let mut out = ds.features().to_vec();
        for row in out.chunks_mut(d) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = if *s == 0.0 { 0.0 } else { (*v - m) / s };
            }
        }
        ds.with_features_unchecked(out)
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.scale
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Standardizes every column to zero mean and unit population standard
/// deviation; constant columns become zeros.
pub fn normalize(ds: &TabularDataset) -> (TabularDataset, Normalizer) {
    let norm = Normalizer::fit(ds);
    (norm.apply(ds), norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> TabularDataset {
        let labels = (0..values.len()).map(|i| i % 2).collect();
        TabularDataset::new(values.to_vec(), 1, labels, 2).unwrap()
    }

    #[test]
    fn population_standard_deviation() {
        let (ds, norm) = normalize(&column(&[1.0, 2.0, 3.0]));
        // sd = sqrt(2/3), so 1/sd = 1.224744871391589
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in ds.features().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(norm.mean, vec![2.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let (ds, norm) = normalize(&column(&[5.0, 5.0, 5.0]));
        assert_eq!(ds.features(), &[0.0, 0.0, 0.0]);
        assert_eq!(norm.constant_columns(), vec![0]);
    }

    #[test]
    fn idempotent() {
        let (once, _) = normalize(&column(&[0.3, -2.0, 7.5, 1.25, 0.0]));
        let (twice, _) = normalize(&once);
        for (a, b) in once.features().iter().zip(twice.features()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
