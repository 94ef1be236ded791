use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{lasso_cv, Design, LassoPath, Utility};
use crate::error::{Error, Result};
use crate::oob::ValueVector;
use crate::rng::{derive_seed, stream_rng};

/// Random subsets for average-marginal-effect regression: for each inclusion
/// probability, `subsets_per_p` subsets with independent Bernoulli inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDesign {
    pub probabilities: Vec<f64>,
    pub subsets_per_p: usize,
    pub folds: usize,
}

impl Default for SubsetDesign {
    fn default() -> Self {
        Self {
            probabilities: vec![0.2, 0.4, 0.6, 0.8],
            subsets_per_p: 200,
            folds: 5,
        }
    }
}

impl SubsetDesign {
    pub fn rows(&self) -> usize {
        self.probabilities.len() * self.subsets_per_p
    }

    fn validate(&self) -> Result<()> {
        if self.probabilities.is_empty() || self.subsets_per_p == 0 {
            return Err(Error::InvalidArgument("subset design is empty".into()));
        }
        if let Some(p) = self.probabilities.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidArgument(format!("inclusion probability {p} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Regression problem built from a subset design.
#[derive(Debug, Clone, PartialEq)]
pub struct AmeDesign {
    /// Rows `g(1_S)` with `g_i = (1_{S,i} - p) / sqrt(p (1 - p))`.
    pub x: Design,
    /// `U(S)` minus the grand mean.
    pub y: Vec<f64>,
    pub y_mean: f64,
    pub evaluations: u64,
}

/// Draws the design and evaluates the utility on every subset. Row `r`
/// uses its own random stream, so rows can be evaluated in any order.
pub fn ame_design(u: &dyn Utility, design: &SubsetDesign, seed: u64) -> Result<AmeDesign> {
    design.validate()?;
    let n = u.n();
    if n == 0 {
        return Err(Error::InsufficientRows { needed: 1, available: 0 });
    }
    let rows: Vec<(Vec<f64>, f64)> = (0..design.rows())
        .into_par_iter()
        .map(|r| {
            let p = design.probabilities[r / design.subsets_per_p];
            let mut rng = stream_rng(derive_seed(seed, "design", 0), "row", r as u64);
            let member: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
            let subset: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
            let utility = u.eval(&subset);
            let sd = (p * (1.0 - p)).sqrt();
            let g = member
                .iter()
                .map(|&m| (f64::from(u8::from(m)) - p) / sd)
                .collect();
            (g, utility)
        })
        .collect();
    let m = rows.len() as f64;
    // shifted by the first response so constant utilities center to exact zeros
    let shift = rows[0].1;
    let y_mean = shift + rows.iter().map(|r| r.1 - shift).sum::<f64>() / m;
    let y = rows.iter().map(|r| r.1 - y_mean).collect();
    let g: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    Ok(AmeDesign {
        x: Design::from_rows(&g)?,
        y,
        y_mean,
        evaluations: design.rows() as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmeResult {
    pub values: ValueVector,
    pub path: LassoPath,
    /// Fraction of values that are exactly zero.
    pub sparsity: f64,
    pub evaluations: u64,
}

/// LASSO coefficients at the cross-validated `lambda`.
pub fn ame_values(u: &dyn Utility, design: &SubsetDesign, seed: u64) -> Result<AmeResult> {
    let d = ame_design(u, design, seed)?;
    let path = lasso_cv(&d.x, &d.y, design.folds, derive_seed(seed, "cv", 0))?;
    let zeros = path.coef.iter().filter(|&&g| g == 0.0).count();
    Ok(AmeResult {
        values: ValueVector::from_values(path.coef.clone()),
        sparsity: zeros as f64 / path.coef.len() as f64,
        path,
        evaluations: d.evaluations,
    })
}
