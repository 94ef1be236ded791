use bitvec::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::forest::BaggingEnsemble;

/// Score `T(y, prediction)` of a weak learner at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreFunction {
    /// `1` if the prediction equals the label, else `0`.
    Correctness,
    /// `-(y - prediction)^2`.
    NegativeSquaredError,
}

impl ScoreFunction {
    pub fn score(self, y: f64, prediction: f64) -> f64 {
        match self {
            ScoreFunction::Correctness => f64::from(u8::from(y == prediction)),
            ScoreFunction::NegativeSquaredError => -(y - prediction) * (y - prediction),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Store {
    Bits(BitVec<u64, Lsb0>),
    Reals(Vec<f64>),
}

/// `B x n` learner-by-point scores plus the out-of-bag mask `w_bi = 0`.
///
/// Correctness scores are packed one bit per cell. In-bag cells are kept even
/// though only out-of-bag cells enter the values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    b: usize,
    kind: ScoreFunction,
    scores: Store,
    oob: BitVec<u64, Lsb0>,
}

impl ScoreMatrix {
    pub fn empty(kind: ScoreFunction, n: usize) -> Self {
        let scores = match kind {
            ScoreFunction::Correctness => Store::Bits(BitVec::new()),
            ScoreFunction::NegativeSquaredError => Store::Reals(Vec::new()),
        };
        Self {
            n,
            b: 0,
            kind,
            scores,
            oob: BitVec::new(),
        }
    }

    /// Appends learner row `b`. The out-of-bag mask is derived from the
    /// learner's bootstrap multiplicities.
    pub fn push_row(&mut self, scores: &[f64], weights: &[u32]) -> Result<()> {
        if scores.len() != self.n || weights.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "score row has {} scores / {} weights, expected {}",
                scores.len(),
                weights.len(),
                self.n
            )));
        }
        match &mut self.scores {
            Store::Bits(bits) => {
                for &s in scores {
                    if s != 0.0 && s != 1.0 {
                        return Err(Error::InvalidArgument(format!(
                            "correctness score must be 0 or 1, got {s}"
                        )));
                    }
                    bits.push(s == 1.0);
                }
            }
            Store::Reals(vals) => {
                if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
                    return Err(Error::InvalidArgument(format!("non-finite score {s}")));
                }
                vals.extend_from_slice(scores);
            }
        }
        self.oob.extend(weights.iter().map(|&w| w == 0));
        self.b += 1;
        Ok(())
    }

    /// Builds from dense rows; `oob_mask[b][i]` must equal `w_bi == 0`, so the
    /// mask is given as weights.
    pub fn from_rows(kind: ScoreFunction, scores: &[Vec<f64>], weights: &[Vec<u32>]) -> Result<Self> {
        if scores.len() != weights.len() || scores.is_empty() {
            return Err(Error::InvalidArgument("need matching, nonempty score and weight rows".into()));
        }
        let mut sm = Self::empty(kind, scores[0].len());
        for (s, w) in scores.iter().zip(weights) {
            sm.push_row(s, w)?;
        }
        Ok(sm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn kind(&self) -> ScoreFunction {
        self.kind
    }

    pub fn score(&self, b: usize, i: usize) -> f64 {
        let k = b * self.n + i;
        match &self.scores {
            Store::Bits(bits) => f64::from(u8::from(bits[k])),
            Store::Reals(vals) => vals[k],
        }
    }

    pub fn is_oob(&self, b: usize, i: usize) -> bool {
        self.oob[b * self.n + i]
    }

    /// Calls `f(i, score)` for each out-of-bag cell of row `b`, in ascending `i`.
    pub(crate) fn for_each_oob(&self, b: usize, mut f: impl FnMut(usize, f64)) {
        let base = b * self.n;
        let mask = &self.oob[base..base + self.n];
        for i in mask.iter_ones() {
            f(i, self.score(b, i));
        }
    }
}

fn score_row(ens: &BaggingEnsemble, b: usize, train: &TabularDataset, kind: ScoreFunction) -> Vec<f64> {
    let tree = &ens.trees()[b];
    (0..train.n_rows())
        .map(|i| kind.score(train.labels()[i] as f64, tree.predict(train.row(i)) as f64))
        .collect()
}

/// Scores every learner on every training point. The ensemble must have been
/// fit on exactly this training set.
pub fn score_matrix(ens: &BaggingEnsemble, train: &TabularDataset, kind: ScoreFunction) -> Result<ScoreMatrix> {
    let found = train.fingerprint();
    if ens.data_fingerprint() != found {
        return Err(Error::FingerprintMismatch {
            expected: ens.data_fingerprint().to_string(),
            found,
        });
    }
    let rows: Vec<Vec<f64>> = (0..ens.n_estimators())
        .into_par_iter()
        .map(|b| score_row(ens, b, train, kind))
        .collect();
    let mut sm = ScoreMatrix::empty(kind, train.n_rows());
    for (b, row) in rows.iter().enumerate() {
        sm.push_row(row, ens.weights().row(b))?;
    }
    Ok(sm)
}
