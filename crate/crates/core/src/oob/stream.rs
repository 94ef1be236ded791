use std::time::Instant;

use rayon::prelude::*;

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::forest::{draw_row, tree_config, BootstrapWeights, ColumnMatrix, DecisionTree, TreeConfig};
use crate::oob::{ScoreFunction, ScoreMatrix};

/// Trees fit concurrently before their score rows are folded into the matrix
/// and the trees dropped.
const BATCH: usize = 32;

/// Bootstrap weights and score matrix of an ensemble that was never kept in
/// memory as a whole.
#[derive(Debug, Clone)]
pub struct OobRun {
    pub weights: BootstrapWeights,
    pub scores: ScoreMatrix,
    /// Wall-clock seconds for fitting and scoring.
    pub elapsed_secs: f64,
}

/// Fits `b` trees and scores each on the training set as soon as it is
/// built. Produces the same weights and scores as
/// [`crate::forest::fit_ensemble`] followed by [`crate::oob::score_matrix`]
/// with the same configuration, while holding at most a batch of trees.
pub fn fit_and_score(train: &TabularDataset, b: usize, cfg: &TreeConfig, kind: ScoreFunction) -> Result<OobRun> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument("ensemble needs at least two training rows".into()));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("ensemble needs B >= 1".into()));
    }
    let start = Instant::now();
    let cols = ColumnMatrix::from_dataset(train);
    let mut rows = Vec::with_capacity(b);
    let mut sm = ScoreMatrix::empty(kind, n);
    for lo in (0..b).step_by(BATCH) {
        let hi = (lo + BATCH).min(b);
        let batch: Vec<(Vec<u32>, Vec<f64>)> = (lo..hi)
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
                let scores = (0..n)
                    .map(|i| kind.score(train.labels()[i] as f64, tree.predict(train.row(i)) as f64))
                    .collect();
                Ok((row, scores))
            })
            .collect::<Result<_>>()?;
        for (row, scores) in batch {
            sm.push_row(&scores, &row)?;
            rows.push(row);
        }
    }
    Ok(OobRun {
        weights: BootstrapWeights::from_rows(rows)?,
        scores: sm,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};
    use crate::forest::fit_ensemble;
    use crate::oob::score_matrix;

    #[test]
    fn matches_kept_ensemble() {
        let ds = generate_synthetic(&SyntheticConfig::new(120, 4, 5)).unwrap();
        let cfg = TreeConfig::with_seed(9);
        let run = fit_and_score(&ds, 40, &cfg, ScoreFunction::Correctness).unwrap();
        let ens = fit_ensemble(&ds, 40, &cfg).unwrap();
        let sm = score_matrix(&ens, &ds, ScoreFunction::Correctness).unwrap();
        assert_eq!(&run.weights, ens.weights());
        for b in 0..40 {
            for i in 0..120 {
                assert_eq!(run.scores.score(b, i), sm.score(b, i));
                assert_eq!(run.scores.is_oob(b, i), sm.is_oob(b, i));
            }
        }
    }
}
