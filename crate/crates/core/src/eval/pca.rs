use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores on the first two principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    /// `n` rows of `(pc1, pc2)`.
    pub scores: Vec<[f64; 2]>,
    /// Unit loadings, each with its largest-magnitude entry positive.
    pub components: [Vec<f64>; 2],
    /// Leading two eigenvalues of the sample covariance.
    pub eigenvalues: [f64; 2],
    pub total_variance: f64,
    /// Covariance rank below two; the second component is zeroed.
    pub rank_deficient: bool,
}

/// Projects row-major `n x d` features onto the top two eigenvectors of the
/// sample covariance (divisor `n - 1`).
pub fn pca2_projection(features: &[f64], d: usize) -> Result<Pca2> {
    if d < 2 {
        return Err(Error::InvalidArgument("projection needs at least two features".into()));
    }
    if !features.len().is_multiple_of(d) {
        return Err(Error::InvalidArgument("feature buffer is not a multiple of d".into()));
    }
    let n = features.len() / d;
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, available: n });
    }
    let mut centered = DMatrix::from_row_slice(n, d, features);
    for j in 0..d {
        let mean = centered.column(j).sum() / n as f64;
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let vector = |k: usize| -> Vec<f64> {
        let v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        let mut lead = 0;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter().map(|x| -x).collect()
        } else {
            v
        }
    };
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = eig.eigenvalues[order[1]].max(0.0);
    let rank_deficient = l1 == 0.0 || l2 <= 1e-12 * l1;
    let first = vector(0);
    let second = if rank_deficient { vec![0.0; d] } else { vector(1) };

    let scores = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let s1: f64 = row.iter().zip(&first).map(|(a, b)| a * b).sum();
            let s2: f64 = row.iter().zip(&second).map(|(a, b)| a * b).sum();
            [s1, s2]
        })
        .collect();
    Ok(Pca2 {
        scores,
        components: [first, second],
        eigenvalues: [l1, if rank_deficient { 0.0 } else { l2 }],
        total_variance,
        rank_deficient,
    })
}
