use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Normalizer, TabularDataset};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_size: usize,
    pub val_fraction: f64,
    pub test_size: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_size: usize, seed: u64) -> Self {
        Self {
            train_size,
            val_fraction: 0.10,
            test_size: 3000,
            seed,
        }
    }

    pub fn val_size(&self) -> usize {
        (self.val_fraction * self.train_size as f64).round() as usize
    }

    pub fn total(&self) -> usize {
        self.train_size + self.val_size() + self.test_size
    }
}

#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: TabularDataset,
    pub val: TabularDataset,
    pub test: TabularDataset,
    /// Fit on the training block, applied to all three.
    pub normalizer: Normalizer,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded shuffle, then consecutive train/validation/test blocks.
pub fn split(ds: &TabularDataset, spec: &SplitSpec) -> Result<DataSplit> {
    if !(0.0..1.0).contains(&spec.val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction {} outside [0, 1)",
            spec.val_fraction
        )));
    }
    if spec.train_size == 0 {
        return Err(Error::InvalidArgument("train_size must be positive".into()));
    }
    let needed = spec.total();
    if needed > ds.n_rows() {
        return Err(Error::InsufficientRows {
            needed,
            available: ds.n_rows(),
        });
    }
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut stream_rng(spec.seed, "split", 0));
    let val_end = spec.train_size + spec.val_size();
    let train_indices = order[..spec.train_size].to_vec();
    let val_indices = order[spec.train_size..val_end].to_vec();
    let test_indices = order[val_end..needed].to_vec();

    let raw_train = ds.subset(&train_indices);
    let normalizer = Normalizer::fit(&raw_train);
    Ok(DataSplit {
        train: normalizer.apply(&raw_train),
        val: normalizer.apply(&ds.subset(&val_indices)),
        test: normalizer.apply(&ds.subset(&test_indices)),
        normalizer,
        train_indices,
        val_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(rows: usize) -> TabularDataset {
        let features = (0..rows).map(|i| i as f64).collect();
        let labels = (0..rows).map(|i| i % 2).collect();
        TabularDataset::new(features, 1, labels, 2).unwrap()
    }

    #[test]
    fn block_sizes() {
        let ds = pool(20800);
        let s = split(&ds, &SplitSpec::new(1000, 3)).unwrap();
        assert_eq!((s.train.n_rows(), s.val.n_rows(), s.test.n_rows()), (1000, 100, 3000));
        let mut all: Vec<usize> = s
            .train_indices
            .iter()
            .chain(&s.val_indices)
            .chain(&s.test_indices)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 4100);
    }

    #[test]
    fn deterministic_under_seed() {
        let ds = pool(500);
        let spec = SplitSpec { test_size: 100, ..SplitSpec::new(200, 11) };
        let a = split(&ds, &spec).unwrap();
        let b = split(&ds, &spec).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.test_indices, b.test_indices);
        let c = split(&ds, &SplitSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn normalization_uses_train_statistics() {
        let ds = pool(500);
        let s = split(&ds, &SplitSpec { test_size: 100, ..SplitSpec::new(200, 1) }).unwrap();
        let mean: f64 = s.train.features().iter().sum::<f64>() / 200.0;
        assert!(mean.abs() < 1e-9);
        let raw = ds.value(s.test_indices[0], 0);
        let expected = (raw - s.normalizer.mean[0]) / s.normalizer.scale[0];
        assert_eq!(s.test.value(0, 0), expected);
    }

    #[test]
    fn insufficient_rows() {
        let ds = pool(100);
        assert!(matches!(
            split(&ds, &SplitSpec::new(1000, 0)),
            Err(Error::InsufficientRows { .. })
        ));
    }
}
