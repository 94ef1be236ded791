use rayon::prelude::*;

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::oob::ValueVector;

/// Validation points are split into this many contiguous groups whose
/// partial sums are added in order, independent of the thread count.
const GROUPS: usize = 64;

/// `round(0.1 * n)`, at least one.
pub fn default_k(n: usize) -> usize {
    ((n as f64 * 0.1).round() as usize).max(1)
}

/// Exact Shapley values of the KNN utility
/// `U(S) = (1/k) * #{i in the k nearest members of S : y_i = y_val}`,
/// averaged over validation points. Neighbors are ranked by Euclidean
/// distance with ties broken by ascending training index. `k > n` is clamped
/// to `n`.
pub fn knn_shapley(train: &TabularDataset, val: &TabularDataset, k: usize) -> Result<ValueVector> {
    let n = train.n_rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if val.n_rows() == 0 {
        return Err(Error::InvalidArgument("validation set is empty".into()));
    }
    if n == 0 {
        return Err(Error::InsufficientRows { needed: 1, available: 0 });
    }
    if val.n_features() != train.n_features() {
        return Err(Error::InvalidArgument("validation and training feature counts differ".into()));
    }
    let k = if k > n {
        log::warn!("k = {k} exceeds {n} training points; using k = {n}");
        n
    } else {
        k
    };

    let m = val.n_rows();
    let per_group = m.div_ceil(GROUPS);
    let partials: Vec<Vec<f64>> = (0..m)
        .step_by(per_group)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|lo| {
            let mut acc = vec![0.0; n];
            let mut s = vec![0.0; n];
            let mut order: Vec<(f64, u32)> = Vec::with_capacity(n);
            for v in lo..(lo + per_group).min(m) {
                shapley_one(train, val.row(v), val.labels()[v], k, &mut order, &mut s);
                for (a, x) in acc.iter_mut().zip(&s) {
                    *a += x;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    let mf = m as f64;
    Ok(ValueVector::from_values(total.into_iter().map(|t| t / mf).collect()))
}

fn shapley_one(
    train: &TabularDataset,
    x: &[f64],
    y: usize,
    k: usize,
    order: &mut Vec<(f64, u32)>,
    s: &mut [f64],
) {
    let n = train.n_rows();
    order.clear();
    order.extend((0..n).map(|i| {
        let d: f64 = train.row(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        (d, i as u32)
    }));
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let hit = |pos: usize| f64::from(u8::from(train.labels()[order[pos].1 as usize] == y));
    let kf = k as f64;
    let mut current = hit(n - 1) / n as f64;
    s[order[n - 1].1 as usize] = current;
    for pos in (0..n - 1).rev() {
        let rank = pos + 1;
        current += (hit(pos) - hit(pos + 1)) * (k.min(rank) as f64) / (kf * rank as f64);
        s[order[pos].1 as usize] = current;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(xs: Vec<f64>, ys: Vec<usize>) -> TabularDataset {
        TabularDataset::new(xs, 1, ys, 2).unwrap()
    }

    #[test]
    fn single_point() {
        let v = knn_shapley(&ds(vec![0.0], vec![1]), &ds(vec![0.5], vec![1]), 1).unwrap();
        assert_eq!(v.psi, vec![1.0]);
        let v = knn_shapley(&ds(vec![0.0], vec![0]), &ds(vec![0.5], vec![1]), 1).unwrap();
        assert_eq!(v.psi, vec![0.0]);
    }

    #[test]
    fn all_matching_labels_share_the_full_utility() {
        let v = knn_shapley(&ds(vec![0.0, 1.0, 2.0, 5.0], vec![1; 4]), &ds(vec![0.0], vec![1]), 2).unwrap();
        let total: f64 = v.psi.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // closer points get more credit
        assert!(v.psi[0] >= v.psi[1] && v.psi[1] >= v.psi[3]);
    }

    #[test]
    fn permutation_invariant() {
        let a = knn_shapley(&ds(vec![0.0, 1.0, 3.0], vec![0, 1, 1]), &ds(vec![0.9], vec![1]), 2).unwrap();
        let b = knn_shapley(&ds(vec![3.0, 0.0, 1.0], vec![1, 0, 1]), &ds(vec![0.9], vec![1]), 2).unwrap();
        assert_eq!(a.psi, vec![b.psi[1], b.psi[2], b.psi[0]]);
    }

    #[test]
    fn k_is_clamped() {
        let a = knn_shapley(&ds(vec![0.0, 1.0], vec![0, 1]), &ds(vec![0.9], vec![1]), 5).unwrap();
        let b = knn_shapley(&ds(vec![0.0, 1.0], vec![0, 1]), &ds(vec![0.9], vec![1]), 2).unwrap();
        assert_eq!(a, b);
        assert!(knn_shapley(&ds(vec![0.0], vec![0]), &ds(vec![0.9], vec![1]), 0).is_err());
    }

    #[test]
    fn default_k_is_ten_percent() {
        assert_eq!(default_k(1000), 100);
        assert_eq!(default_k(3), 1);
    }
}
