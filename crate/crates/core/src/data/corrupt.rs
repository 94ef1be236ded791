use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Which training rows had their labels replaced, and what they were.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    /// Sorted ascending.
    pub flipped_indices: Vec<usize>,
    pub original_labels: BTreeMap<usize, usize>,
    pub rate: f64,
}

impl CorruptionRecord {
    pub fn is_empty(&self) -> bool {
        self.flipped_indices.is_empty()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.flipped_indices {
            mask[i] = true;
        }
        mask
    }
}

/// Replaces the labels of exactly `round(rate * n)` uniformly chosen rows
/// with a label drawn uniformly from the other classes.
pub fn flip_labels(
    train: &TabularDataset,
    rate: f64,
    seed: u64,
) -> Result<(TabularDataset, CorruptionRecord)> {
    let classes = train.class_count();
    if classes < 2 {
        return Err(Error::SingleClass(classes));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("corruption rate {rate} outside [0, 1)")));
    }
    let n = train.n_rows();
    let count = (rate * n as f64).round() as usize;
    let mut rng = stream_rng(seed, "corruption", 0);
    let mut flipped = rand::seq::index::sample(&mut rng, n, count).into_vec();
    flipped.sort_unstable();

    let mut labels = train.labels().to_vec();
    let mut original_labels = BTreeMap::new();
    for &i in &flipped {
        let old = labels[i];
        let draw = rng.random_range(0..classes - 1);
        labels[i] = if draw >= old { draw + 1 } else { draw };
        original_labels.insert(i, old);
    }
    Ok((
        train.with_labels(labels)?,
        CorruptionRecord {
            flipped_indices: flipped,
            original_labels,
            rate,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(n: usize, classes: usize) -> TabularDataset {
        let features = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| i % classes).collect();
        TabularDataset::new(features, 1, labels, classes).unwrap()
    }

    #[test]
    fn exact_count_and_binary_complement() {
        let ds = dataset(1000, 2);
        let (noisy, rec) = flip_labels(&ds, 0.10, 5).unwrap();
        assert_eq!(rec.flipped_indices.len(), 100);
        for &i in &rec.flipped_indices {
            assert_eq!(noisy.labels()[i], 1 - ds.labels()[i]);
            assert_eq!(rec.original_labels[&i], ds.labels()[i]);
        }
        let changed = (0..1000).filter(|&i| noisy.labels()[i] != ds.labels()[i]).count();
        assert_eq!(changed, 100);
    }

    #[test]
    fn multiclass_never_maps_to_itself() {
        let ds = dataset(600, 4);
        let (noisy, rec) = flip_labels(&ds, 0.5, 9).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for &i in &rec.flipped_indices {
            assert_ne!(noisy.labels()[i], ds.labels()[i]);
            seen.insert(noisy.labels()[i]);
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn zero_count_is_a_no_op() {
        let ds = dataset(10, 2);
        let (noisy, rec) = flip_labels(&ds, 0.04, 1).unwrap();
        assert!(rec.is_empty());
        assert_eq!(noisy, ds);
    }

    #[test]
    fn deterministic() {
        let ds = dataset(300, 3);
        assert_eq!(flip_labels(&ds, 0.1, 4).unwrap().1, flip_labels(&ds, 0.1, 4).unwrap().1);
        assert_ne!(flip_labels(&ds, 0.1, 4).unwrap().1, flip_labels(&ds, 0.1, 5).unwrap().1);
    }
}
