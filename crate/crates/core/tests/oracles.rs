//! Property tests of the library against the reference implementations in
//! `common`.

mod common;

use proptest::prelude::*;
use rand::Rng;

use dataoob::baselines::{
    knn_shapley, lasso_fit, semivalue_aggregate, Design, FnUtility, SemivalueWeights, Utility,
};
use dataoob::forest::BootstrapWeights;
use dataoob::oob::{
    data_oob_values, infinitesimal_jackknife, oob_estimate, oob_scores, pairwise_decomposition, ScoreFunction,
    ScoreMatrix,
};

use common::*;

fn matrices(seed: u64, n: usize, b: usize) -> (Vec<Vec<f64>>, Vec<Vec<u32>>) {
    let mut r = rng(seed);
    let w: Vec<Vec<u32>> = (0..b).map(|_| bootstrap_row(&mut r, n)).collect();
    let s = (0..b)
        .map(|_| (0..n).map(|_| f64::from(u8::from(r.random_bool(0.5)))).collect())
        .collect();
    (s, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_match_direct_summation(seed in any::<u64>(), n in 1usize..25, b in 1usize..60) {
        let (s, w) = matrices(seed, n, b);
        let sm = ScoreMatrix::from_rows(ScoreFunction::Correctness, &s, &w).unwrap();
        let got = data_oob_values(&sm);
        for (i, want) in direct_oob_values(&s, &w).into_iter().enumerate() {
            match want {
                Some(v) => {
                    prop_assert!(!got.undefined[i]);
                    prop_assert_eq!(got.psi[i], v);
                    prop_assert!((0.0..=1.0).contains(&got.psi[i]));
                }
                None => prop_assert!(got.undefined[i] && got.psi[i].is_nan()),
            }
        }
    }

    #[test]
    fn estimate_is_mean_of_values(seed in any::<u64>(), n in 2usize..25) {
        let (s, w) = matrices(seed, n, 80);
        let v = data_oob_values(&ScoreMatrix::from_rows(ScoreFunction::Correctness, &s, &w).unwrap());
        prop_assume!(v.undefined_count() == 0);
        let mean = v.psi.iter().sum::<f64>() / n as f64;
        prop_assert!((oob_estimate(&v).unwrap() - mean).abs() < 1e-15);
    }

    #[test]
    fn influence_pairs_match_decomposition(seed in any::<u64>(), n in 2usize..20) {
        let (s, w) = matrices(seed, n, 60);
        let sm = ScoreMatrix::from_rows(ScoreFunction::Correctness, &s, &w).unwrap();
        let v = data_oob_values(&sm);
        prop_assume!(v.undefined_count() == 0);
        let weights = BootstrapWeights::from_rows(w).unwrap();
        let sc = oob_scores(&sm);
        let inf = infinitesimal_jackknife(&weights, &v, &sc).unwrap();
        for i in 0..n {
            for j in 0..n {
                let t = pairwise_decomposition(&weights, &v, &sc, i, j).unwrap();
                prop_assert!((inf.psi_ij[i] - inf.psi_ij[j] - t.difference()).abs() < 1e-10);
                prop_assert!(t.centered_mean.abs() <= t.cs_bound + 1e-12);
            }
        }
    }

    #[test]
    fn knn_matches_enumeration(seed in any::<u64>(), n in 1usize..8, k in 1usize..9) {
        let mut r = rng(seed);
        let train = random_dataset(&mut r, n, 2, 2);
        let val = random_dataset(&mut r, 2, 2, 2);
        let got = knn_shapley(&train, &val, k).unwrap();
        let k = k.min(n);
        for i in 0..n {
            let want: f64 = (0..2)
                .map(|v| brute_shapley(n, |s| knn_utility(&train, val.row(v), val.labels()[v], k, s))[i])
                .sum::<f64>() / 2.0;
            prop_assert!((got.psi[i] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_is_invariant_to_row_order(seed in any::<u64>(), n in 2usize..30) {
        let mut r = rng(seed);
        let train = random_dataset(&mut r, n, 3, 3);
        let val = random_dataset(&mut r, 5, 3, 3);
        let perm: Vec<usize> = (0..n).rev().collect();
        let a = knn_shapley(&train, &val, 3).unwrap();
        let b = knn_shapley(&train.subset(&perm), &val, 3).unwrap();
        for (p, &i) in perm.iter().enumerate() {
            prop_assert!((a.psi[i] - b.psi[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_weights_form_a_distribution(n in 1usize..200, a in 0.5f64..32.0, b in 0.5f64..32.0) {
        let w = SemivalueWeights::beta_shapley(n, a, b).unwrap();
        let sum: f64 = w.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(w.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn lasso_without_penalty_is_least_squares(seed in any::<u64>(), p in 1usize..6) {
        let mut r = rng(seed);
        let m = 10 * p + 5;
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| r.random::<f64>() - 0.5).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|row| row.iter().sum::<f64>() + r.random::<f64>()).collect();
        let fit = lasso_fit(&Design::from_rows(&rows).unwrap(), &y, 0.0).unwrap();
        let ls = least_squares(&rows, &y);
        for (a, b) in fit.coef.iter().zip(&ls) {
            prop_assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}

#[test]
fn beta_one_one_is_shapley() {
    for n in [1, 2, 5, 17] {
        let a = SemivalueWeights::beta_shapley(n, 1.0, 1.0).unwrap();
        let u = SemivalueWeights::uniform(n);
        for (x, y) in a.as_slice().iter().zip(u.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_semivalue_with_uniform_weights_is_shapley() {
    let v = [0.3, -0.1, 0.7, 0.2, 0.05];
    let game = FnUtility::new(5, |s: &[usize]| {
        let base: f64 = s.iter().map(|&i| v[i]).sum();
        // one interaction term between players 0 and 2
        base + if s.contains(&0) && s.contains(&2) { 0.4 } else { 0.0 }
    });
    let exact = exact_semivalue(&game, SemivalueWeights::uniform(5).as_slice());
    let brute = brute_shapley(5, |s| game.eval(s));
    for i in 0..5 {
        assert!((exact[i] - brute[i]).abs() < 1e-12);
    }
    assert!((exact[0] - 0.5).abs() < 1e-12);
}

#[test]
fn aggregate_of_complete_enumeration_is_exact() {
    // Feed every (cardinality, subset) marginal once, weighted so each
    // cardinality mean is exact.
    let v = [1.0, 2.0, 4.0];
    let game = FnUtility::new(3, |s: &[usize]| s.iter().map(|&i| v[i]).sum::<f64>().powi(2));
    let weights = SemivalueWeights::beta_shapley(3, 4.0, 1.0).unwrap();
    let exact = exact_semivalue(&game, weights.as_slice());
    for z in 0..3 {
        let mut samples = Vec::new();
        for mask in 0..8usize {
            if mask >> z & 1 == 1 {
                continue;
            }
            let s: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let mut with = s.clone();
            with.push(z);
            with.sort();
            samples.push((s.len() + 1, game.eval(&with) - game.eval(&s)));
        }
        let (got, filled) = semivalue_aggregate(&samples, &weights).unwrap();
        assert!(!filled);
        assert!((got - exact[z]).abs() < 1e-12);
    }
}
