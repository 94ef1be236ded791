use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::eval::logistic_fit;
use crate::oob::ValueVector;
use crate::rng::stream_rng;

const LAST_FRACTION: f64 = 0.95;

/// Test accuracy after removing growing prefixes of a removal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalCurve {
    pub method: String,
    pub fractions: Vec<f64>,
    pub removed: Vec<usize>,
    pub accuracies: Vec<f64>,
    /// Remaining training data had a single class at this fraction.
    pub single_class: Vec<bool>,
    pub order: Vec<usize>,
}

/// `0, stride, 2 * stride, ...` up to 0.95.
pub fn removal_grid(stride: f64) -> Result<Vec<f64>> {
    if !(stride > 0.0 && stride <= 0.5) {
        return Err(Error::InvalidArgument(format!("stride {stride} outside (0, 0.5]")));
    }
    let steps = ((LAST_FRACTION / stride) + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| (k as f64 * stride * 1e12).round() / 1e12).collect())
}

/// Refits on the training set minus the first `round(f * n)` entries of
/// `order`, for every grid fraction `f`.
pub fn removal_curve_from_order(
    method: &str,
    order: Vec<usize>,
    train: &TabularDataset,
    test: &TabularDataset,
    stride: f64,
) -> Result<RemovalCurve> {
    let n = train.n_rows();
    if test.n_rows() == 0 {
        return Err(Error::InvalidArgument("test set is empty".into()));
    }
    if order.len() != n {
        return Err(Error::InvalidArgument(format!("removal order covers {} of {n} points", order.len())));
    }
    let fractions = removal_grid(stride)?;
    let removed: Vec<usize> = fractions.iter().map(|f| (f * n as f64).round() as usize).collect();
    let results: Vec<(f64, bool)> = removed
        .par_iter()
        .map(|&k| {
            let mut keep = order[k..].to_vec();
            keep.sort_unstable();
            let rest = train.subset(&keep);
            let single = rest.class_frequencies().iter().filter(|&&c| c > 0).count() < 2;
            (logistic_fit(&rest).model.accuracy(test), single)
        })
        .collect();
    let (accuracies, single_class) = results.into_iter().unzip();
    Ok(RemovalCurve {
        method: method.to_string(),
        fractions,
        removed,
        accuracies,
        single_class,
        order,
    })
}

/// Removes the lowest-valued points first; ties by index, undefined values
/// first.
pub fn point_removal_curve(
    method: &str,
    values: &ValueVector,
    train: &TabularDataset,
    test: &TabularDataset,
    stride: f64,
) -> Result<RemovalCurve> {
    if values.len() != train.n_rows() {
        return Err(Error::InvalidArgument("values and training set differ in length".into()));
    }
    let undefined = values.undefined_count();
    if undefined > 0 {
        log::warn!("{undefined} undefined values ranked lowest for removal");
    }
    removal_curve_from_order(method, values.ascending_order(), train, test, stride)
}

/// Baseline that removes points in a seeded random order.
pub fn random_removal_curve(train: &TabularDataset, test: &TabularDataset, stride: f64, seed: u64) -> Result<RemovalCurve> {
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    order.shuffle(&mut stream_rng(seed, "removal-random", 0));
    removal_curve_from_order("random", order, train, test, stride)
}
