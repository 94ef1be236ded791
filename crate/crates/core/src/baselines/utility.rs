use std::sync::atomic::{AtomicU64, Ordering};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::forest::{ColumnMatrix, DecisionTree, TreeConfig};

/// Performance of a model trained on a subset of the training points.
pub trait Utility: Sync {
    /// Number of training points.
    fn n(&self) -> usize;

    /// Utility of the subset given by (distinct) training indices.
    fn eval(&self, subset: &[usize]) -> f64;
}

/// Validation accuracy of a single decision tree fit on the subset. The
/// empty subset scores as the best constant predictor, i.e. the validation
/// frequency of the most common validation class.
pub struct TreeUtility<'a> {
    train: &'a TabularDataset,
    cols: ColumnMatrix,
    val: &'a TabularDataset,
    cfg: TreeConfig,
    constant: f64,
    evaluations: AtomicU64,
}

impl<'a> TreeUtility<'a> {
    pub fn new(train: &'a TabularDataset, val: &'a TabularDataset, cfg: TreeConfig) -> Result<Self> {
        if val.n_rows() == 0 {
            return Err(Error::InvalidArgument("validation set is empty".into()));
        }
        if val.n_features() != train.n_features() {
            return Err(Error::InvalidArgument(format!(
                "validation has {} features, training has {}",
                val.n_features(),
                train.n_features()
            )));
        }
        cfg.resolved_max_features(train.n_features())?;
        let best = val.class_frequencies().into_iter().max().unwrap_or(0);
        Ok(Self {
            train,
            cols: ColumnMatrix::from_dataset(train),
            val,
            cfg,
            constant: best as f64 / val.n_rows() as f64,
            evaluations: AtomicU64::new(0),
        })
    }

    /// Utility evaluations performed so far, including empty subsets.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn empty_value(&self) -> f64 {
        self.constant
    }
}

impl Utility for TreeUtility<'_> {
    fn n(&self) -> usize {
        self.train.n_rows()
    }

    fn eval(&self, subset: &[usize]) -> f64 {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        if subset.is_empty() {
            return self.constant;
        }
        let mut weights = vec![0u32; self.train.n_rows()];
        for &i in subset {
            weights[i] = 1;
        }
        let classes = self.train.class_count().max(self.val.class_count());
        let tree = DecisionTree::fit_columns(&self.cols, self.train.labels(), classes, &weights, &self.cfg)
            .expect("configuration validated and subset nonempty");
        let correct = (0..self.val.n_rows())
            .filter(|&i| tree.predict(self.val.row(i)) == self.val.labels()[i])
            .count();
        correct as f64 / self.val.n_rows() as f64
    }
}

/// Wraps a closure as a utility, for synthetic games.
pub struct FnUtility<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[usize]) -> f64 + Sync> FnUtility<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[usize]) -> f64 + Sync> Utility for FnUtility<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, subset: &[usize]) -> f64 {
        (self.f)(subset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (TabularDataset, TabularDataset) {
        let train = TabularDataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 0, 1, 1], 2).unwrap();
        // 7 of 10 validation labels are class 1
        let xs: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.3).collect();
        let ys = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
        let val = TabularDataset::new(xs, 1, ys, 2).unwrap();
        (train, val)
    }

    #[test]
    fn empty_subset_is_best_constant() {
        let (train, val) = toy();
        let u = TreeUtility::new(&train, &val, TreeConfig::default()).unwrap();
        assert_eq!(u.eval(&[]), 0.7);
    }

    #[test]
    fn full_set_on_separable_data() {
        let train = TabularDataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 0, 1, 1], 2).unwrap();
        let val = TabularDataset::new(vec![0.2, 0.8, 2.2, 2.9], 1, vec![0, 0, 1, 1], 2).unwrap();
        let u = TreeUtility::new(&train, &val, TreeConfig::default()).unwrap();
        assert_eq!(u.eval(&[0, 1, 2, 3]), 1.0);
        assert_eq!(u.evaluations(), 1);
    }

    #[test]
    fn single_point_predicts_its_class() {
        let (train, val) = toy();
        let u = TreeUtility::new(&train, &val, TreeConfig::default()).unwrap();
        let freq = |c: usize| val.labels().iter().filter(|&&y| y == c).count() as f64 / 10.0;
        assert_eq!(u.eval(&[0]), freq(0));
        assert_eq!(u.eval(&[3]), freq(1));
    }
}
