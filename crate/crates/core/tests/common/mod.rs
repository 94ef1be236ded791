//! Independent reference implementations used by the integration and
//! acceptance tests. Everything here is written for clarity, not speed.
#![allow(dead_code)]

use dataoob::baselines::Utility;
use dataoob::data::TabularDataset;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Out-of-bag value of every point by direct double loop.
pub fn direct_oob_values(scores: &[Vec<f64>], weights: &[Vec<u32>]) -> Vec<Option<f64>> {
    let n = scores[0].len();
    (0..n)
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for b in 0..scores.len() {
                if weights[b][i] == 0 {
                    num += scores[b][i];
                    den += 1.0;
                }
            }
            (den > 0.0).then(|| num / den)
        })
        .collect()
}

/// A multinomial bootstrap row drawn by `n` independent uniform picks.
pub fn bootstrap_row(r: &mut impl Rng, n: usize) -> Vec<u32> {
    let mut w = vec![0u32; n];
    for _ in 0..n {
        w[r.random_range(0..n)] += 1;
    }
    w
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `U(S) = (1/k) * #{label matches among the min(k, |S|) nearest points of S}`.
pub fn knn_utility(train: &TabularDataset, x: &[f64], y: usize, k: usize, subset: &[usize]) -> f64 {
    let mut s: Vec<usize> = subset.to_vec();
    s.sort_by(|&a, &b| {
        sq_dist(train.row(a), x)
            .total_cmp(&sq_dist(train.row(b), x))
            .then(a.cmp(&b))
    });
    s.iter().take(k).filter(|&&i| train.labels()[i] == y).count() as f64 / k as f64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shapley values of an arbitrary set function on `n <= 16` players by full
/// enumeration of the `2^n` subsets.
pub fn brute_shapley(n: usize, u: impl Fn(&[usize]) -> f64) -> Vec<f64> {
    let table: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            u(&s)
        })
        .collect();
    let nf = factorial(n);
    (0..n)
        .map(|i| {
            let mut v = 0.0;
            for mask in 0..1usize << n {
                if mask >> i & 1 == 1 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let w = factorial(s) * factorial(n - s - 1) / nf;
                v += w * (table[mask | 1 << i] - table[mask]);
            }
            v
        })
        .collect()
}

/// Exact semivalue `sum_j beta_j * mean_{|S| = j-1} [U(S + z) - U(S)]`.
pub fn exact_semivalue(u: &dyn Utility, beta: &[f64]) -> Vec<f64> {
    let n = u.n();
    let table: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            u.eval(&s)
        })
        .collect();
    (0..n)
        .map(|z| {
            let mut sums = vec![0.0; n];
            let mut counts = vec![0usize; n];
            for mask in 0..1usize << n {
                if mask >> z & 1 == 1 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                sums[s] += table[mask | 1 << z] - table[mask];
                counts[s] += 1;
            }
            (0..n).map(|s| beta[s] * sums[s] / counts[s] as f64).sum()
        })
        .collect()
}

/// Least squares through the normal equations, solved by Gaussian
/// elimination with partial pivoting. `x` is row-major `m x p`.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += row[r] * row[c];
            }
            a[r][p] += row[r] * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p).map(|r| a[r][p] / a[r][r]).collect()
}

/// Average ranks (ties share the mean rank).
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Random dataset with `n` rows of uniform features and random labels in
/// `0..classes`, every class present if `n >= classes`.
pub fn random_dataset(r: &mut impl Rng, n: usize, d: usize, classes: usize) -> TabularDataset {
    let x: Vec<f64> = (0..n * d).map(|_| r.random::<f64>()).collect();
    let y: Vec<usize> = (0..n)
        .map(|i| if i < classes { i } else { r.random_range(0..classes) })
        .collect();
    TabularDataset::new(x, d, y, classes).unwrap()
}

/// Two Gaussian blobs with labels by blob, so that trees have signal.
pub fn blobs(r: &mut impl Rng, n: usize, spread: f64) -> TabularDataset {
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let centre = if c == 0 { -1.0 } else { 1.0 };
        x.push(centre + spread * (r.random::<f64>() - 0.5));
        x.push(spread * (r.random::<f64>() - 0.5));
        y.push(c);
    }
    TabularDataset::new(x, 2, y, 2).unwrap()
}
