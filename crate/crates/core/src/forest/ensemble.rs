use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::forest::bootstrap::draw_row;
use crate::forest::{BootstrapWeights, ColumnMatrix, DecisionTree, TreeConfig};
use crate::rng::derive_seed;

const FORMAT_VERSION: u32 = 1;

/// `B` trees, each paired with the bootstrap multiplicity row it was fit on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaggingEnsemble {
    format_version: u32,
    trees: Vec<DecisionTree>,
    weights: BootstrapWeights,
    config: TreeConfig,
    data_fingerprint: String,
    #[serde(skip)]
    elapsed_secs: f64,
}

/// Seed for tree `b`, mixed from the master seed so that scheduling order
/// cannot influence results.
pub(crate) fn tree_config(cfg: &TreeConfig, b: usize) -> TreeConfig {
    TreeConfig {
        seed: derive_seed(cfg.seed, "tree", b as u64),
        ..cfg.clone()
    }
}

impl BaggingEnsemble {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn weights(&self) -> &BootstrapWeights {
        &self.weights
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn data_fingerprint(&self) -> &str {
        &self.data_fingerprint
    }

    /// Wall-clock seconds spent fitting (not persisted).
    pub fn elapsed_secs(&self) -> f64 {
        self.elapsed_secs
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        predict_ensemble(self, x)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ens: Self = serde_json::from_reader(file)?;
        if ens.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported ensemble format version {}",
                ens.format_version
            )));
        }
        if ens.trees.len() != ens.weights.b() {
            return Err(Error::InvalidArgument("tree count does not match weight rows".into()));
        }
        Ok(ens)
    }
}

/// Draws `B` multinomial bootstrap rows and fits one tree per row. Trees are
/// fit in parallel on the current rayon pool.
pub fn fit_ensemble(train: &TabularDataset, b: usize, cfg: &TreeConfig) -> Result<BaggingEnsemble> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument("ensemble needs at least two training rows".into()));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("ensemble needs B >= 1".into()));
    }
    let start = Instant::now();
    let cols = ColumnMatrix::from_dataset(train);
    let fitted: Vec<(Vec<u32>, DecisionTree)> = (0..b)
        .into_par_iter()
        .map(|k| {
            let row = draw_row(n, cfg.seed, k);
            let tree = DecisionTree::fit_columns(
                &cols,
                train.labels(),
                train.class_count(),
                &row,
                &tree_config(cfg, k),
            )?;
            Ok((row, tree))
        })
        .collect::<Result<_>>()?;
    let (rows, trees): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    Ok(BaggingEnsemble {
        format_version: FORMAT_VERSION,
        trees,
        weights: BootstrapWeights::from_rows(rows)?,
        config: cfg.clone(),
        data_fingerprint: train.fingerprint(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Fits one tree per row of a caller-supplied weight matrix.
pub fn fit_ensemble_with_weights(
    train: &TabularDataset,
    weights: BootstrapWeights,
    cfg: &TreeConfig,
) -> Result<BaggingEnsemble> {
    if weights.n() != train.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "weights cover {} points, dataset has {}",
            weights.n(),
            train.n_rows()
        )));
    }
    let start = Instant::now();
    let cols = ColumnMatrix::from_dataset(train);
    let trees = (0..weights.b())
        .into_par_iter()
        .map(|k| {
            DecisionTree::fit_columns(
                &cols,
                train.labels(),
                train.class_count(),
                weights.row(k),
                &tree_config(cfg, k),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggingEnsemble {
        format_version: FORMAT_VERSION,
        trees,
        weights,
        config: cfg.clone(),
        data_fingerprint: train.fingerprint(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Plurality vote; ties go to the smallest class index.
pub fn predict_ensemble(ens: &BaggingEnsemble, x: &[f64]) -> usize {
    let classes = ens.trees.first().map_or(0, DecisionTree::class_count);
    let mut votes = vec![0usize; classes];
    for tree in &ens.trees {
        votes[tree.predict(x)] += 1;
    }
    let mut best = 0;
    for (k, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};
    use crate::forest::fit_tree;

    fn synthetic(n: usize, d: usize, seed: u64) -> TabularDataset {
        generate_synthetic(&SyntheticConfig::new(n, d, seed)).unwrap()
    }

    #[test]
    fn all_ones_single_tree_equals_plain_tree() {
        let data = synthetic(80, 4, 1);
        let cfg = TreeConfig::with_seed(3);
        let weights = BootstrapWeights::from_rows(vec![vec![1; 80]]).unwrap();
        let ens = fit_ensemble_with_weights(&data, weights, &cfg).unwrap();
        let tree = fit_tree(&data, &[1; 80], &tree_config(&cfg, 0)).unwrap();
        assert_eq!(ens.trees()[0], tree);
        for i in 0..data.n_rows() {
            assert_eq!(ens.predict(data.row(i)), tree.predict(data.row(i)));
        }
    }

    #[test]
    fn identical_across_worker_counts() {
        let data = synthetic(150, 5, 2);
        let cfg = TreeConfig::with_seed(17);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit_ensemble(&data, 24, &cfg).unwrap())
        };
        let one = run(1);
        for threads in [2, 4] {
            let many = run(threads);
            assert_eq!(one.trees(), many.trees());
            assert_eq!(one.weights(), many.weights());
        }
    }

    #[test]
    fn weights_rows_sum_to_n_and_match_trees() {
        let data = synthetic(60, 3, 4);
        let ens = fit_ensemble(&data, 10, &TreeConfig::with_seed(1)).unwrap();
        assert_eq!(ens.n_estimators(), 10);
        for row in ens.weights().rows() {
            assert_eq!(row.iter().sum::<u32>(), 60);
        }
        assert_eq!(ens.data_fingerprint(), data.fingerprint());
    }

    #[test]
    fn vote_ties_go_to_smallest_class() {
        let data = synthetic(20, 2, 5);
        let mut ens = fit_ensemble(&data, 2, &TreeConfig::with_seed(1)).unwrap();
        ens.trees = vec![DecisionTree::leaf_only(vec![0, 1]), DecisionTree::leaf_only(vec![1, 0])];
        assert_eq!(ens.predict(&[0.0, 0.0]), 0);
        ens.trees = vec![DecisionTree::leaf_only(vec![0, 1]), DecisionTree::leaf_only(vec![0, 1])];
        assert_eq!(ens.predict(&[0.0, 0.0]), 1);
    }

    #[test]
    fn json_round_trip() {
        let data = synthetic(40, 3, 6);
        let ens = fit_ensemble(&data, 5, &TreeConfig::with_seed(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.json");
        ens.save_json(&path).unwrap();
        let back = BaggingEnsemble::load_json(&path).unwrap();
        assert_eq!(back.trees(), ens.trees());
        assert_eq!(back.weights(), ens.weights());
        assert_eq!(back.config(), ens.config());
    }

    #[test]
    fn rejects_tiny_training_sets() {
        let data = synthetic(1, 2, 0);
        assert!(fit_ensemble(&data, 3, &TreeConfig::default()).is_err());
    }
}
