use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

const TOLERANCE: f64 = 1e-7;
const MAX_SWEEPS: usize = 10_000;

/// Dense `m x n` design matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("design needs equal-length, nonempty rows".into()));
        }
        let mut data = vec![0.0; m * n];
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, column: j });
                }
                data[j * m + i] = x;
            }
        }
        Ok(Self { m, n, data })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.m + i]
    }

    /// Rows at the given positions, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * self.n);
        for j in 0..self.n {
            let c = self.col(j);
            data.extend(idx.iter().map(|&i| c[i]));
        }
        Self { m, n: self.n, data }
    }

    fn predict(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, &g) in coef.iter().enumerate() {
            if g != 0.0 {
                for (o, x) in out.iter_mut().zip(self.col(j)) {
                    *o += g * x;
                }
            }
        }
        out
    }
}

/// `(1/m) * ||y - X g||^2 + lambda * ||g||_1`.
pub fn lasso_objective(x: &Design, y: &[f64], coef: &[f64], lambda: f64) -> f64 {
    let pred = x.predict(coef);
    let rss: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
    rss / x.rows() as f64 + lambda * coef.iter().map(|g| g.abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep.
    pub objective_trace: Vec<f64>,
}

fn validate(x: &Design, y: &[f64], lambda: f64) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::InvalidArgument(format!("{} responses for {} rows", y.len(), x.rows())));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, column: 0 });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn soft_threshold(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

fn descend(x: &Design, y: &[f64], lambda: f64, start: Vec<f64>, trace: bool) -> LassoFit {
    let m = x.rows() as f64;
    let mut coef = start;
    let mut resid: Vec<f64> = y.iter().zip(x.predict(&coef)).map(|(a, p)| a - p).collect();
    let scale: Vec<f64> = (0..x.cols()).map(|j| x.col(j).iter().map(|v| v * v).sum::<f64>() / m).collect();
    let mut objective_trace = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..x.cols() {
            if scale[j] == 0.0 {
                continue;
            }
            let col = x.col(j);
            let old = coef[j];
            let c = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / m + scale[j] * old;
            let new = soft_threshold(c, lambda / 2.0) / scale[j];
            if new != old {
                let d = new - old;
                for (r, a) in resid.iter_mut().zip(col) {
                    *r -= d * a;
                }
                coef[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if trace {
            let rss: f64 = resid.iter().map(|r| r * r).sum();
            objective_trace.push(rss / m + lambda * coef.iter().map(|g| g.abs()).sum::<f64>());
        }
        if max_change < TOLERANCE {
            converged = true;
            break;
        }
    }
    LassoFit {
        coef,
        sweeps,
        converged,
        objective_trace,
    }
}

/// Cyclic coordinate descent with soft-thresholding, from zero, until the
/// largest coefficient change in a sweep is below `1e-7` or after `10^4`
/// sweeps.
pub fn lasso_fit(x: &Design, y: &[f64], lambda: f64) -> Result<LassoFit> {
    validate(x, y, lambda)?;
    Ok(descend(x, y, lambda, vec![0.0; x.cols()], true))
}

/// Smallest `lambda` at which the solution is exactly zero:
/// `(2/m) * max_j |X_j' y|`.
pub fn lambda_max(x: &Design, y: &[f64]) -> f64 {
    let m = x.rows() as f64;
    (0..x.cols())
        .map(|j| (x.col(j).iter().zip(y).map(|(a, b)| a * b).sum::<f64>() * 2.0 / m).abs())
        .fold(0.0, f64::max)
}

/// `count` values log-spaced from `top` down to `ratio * top`.
pub fn lambda_grid(top: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![top];
    }
    let (hi, lo) = (top.ln(), (top * ratio).ln());
    (0..count)
        .map(|k| (hi + (lo - hi) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

fn path(x: &Design, y: &[f64], lambdas: &[f64]) -> Vec<Vec<f64>> {
    let mut warm = vec![0.0; x.cols()];
    let mut out = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let fit = descend(x, y, l, warm, false);
        warm = fit.coef.clone();
        out.push(fit.coef);
    }
    out
}

/// Cross-validated regularization path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    /// Decreasing.
    pub lambdas: Vec<f64>,
    /// `fold_errors[f][l]`: held-out mean squared error of fold `f` at
    /// `lambdas[l]`.
    pub fold_errors: Vec<Vec<f64>>,
    pub cv_errors: Vec<f64>,
    pub selected: usize,
    /// Refit on all rows at the selected `lambda`.
    pub coef: Vec<f64>,
}

impl LassoPath {
    pub fn lambda(&self) -> f64 {
        self.lambdas[self.selected]
    }
}

/// `folds`-fold cross-validation over a 100-point grid from `lambda_max`
/// down to `1e-3 * lambda_max`. Folds are contiguous blocks of the rows after
/// a seeded shuffle. Ties in CV error go to the larger `lambda`.
pub fn lasso_cv(x: &Design, y: &[f64], folds: usize, seed: u64) -> Result<LassoPath> {
    validate(x, y, 0.0)?;
    let m = x.rows();
    if folds < 2 || folds > m {
        return Err(Error::InvalidArgument(format!("{folds} folds for {m} rows")));
    }
    let top = lambda_max(x, y);
    if top == 0.0 {
        return Ok(LassoPath {
            lambdas: vec![0.0],
            fold_errors: vec![vec![0.0]; folds],
            cv_errors: vec![0.0],
            selected: 0,
            coef: vec![0.0; x.cols()],
        });
    }
    let lambdas = lambda_grid(top, 1e-3, 100);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut stream_rng(seed, "cv", 0));

    let mut fold_errors = Vec::with_capacity(folds);
    for f in 0..folds {
        let lo = f * m / folds;
        let hi = (f + 1) * m / folds;
        let held: Vec<usize> = order[lo..hi].to_vec();
        let kept: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let xt = x.select_rows(&kept);
        let yt: Vec<f64> = kept.iter().map(|&i| y[i]).collect();
        let xh = x.select_rows(&held);
        let yh: Vec<f64> = held.iter().map(|&i| y[i]).collect();
        let errs: Vec<f64> = path(&xt, &yt, &lambdas)
            .iter()
            .map(|coef| {
                let pred = xh.predict(coef);
                yh.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / yh.len() as f64
            })
            .collect();
        fold_errors.push(errs);
    }
    let cv_errors: Vec<f64> = (0..lambdas.len())
        .map(|l| fold_errors.iter().map(|e| e[l]).sum::<f64>() / folds as f64)
        .collect();
    let mut selected = 0;
    for (l, &e) in cv_errors.iter().enumerate() {
        if e < cv_errors[selected] {
            selected = l;
        }
    }
    // refit on everything along the path up to the chosen lambda
    let coef = path(x, y, &lambdas[..=selected]).pop().expect("nonempty path");
    Ok(LassoPath {
        lambdas,
        fold_errors,
        cv_errors,
        selected,
        coef,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Design, Vec<f64>) {
        let rows = vec![
            vec![1.0, 0.5],
            vec![-1.0, 0.2],
            vec![0.3, -1.0],
            vec![0.7, 0.9],
            vec![-0.4, -0.6],
        ];
        let y = vec![1.2, -0.8, -0.5, 1.5, -0.9];
        (Design::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn huge_lambda_zeroes_everything() {
        let (x, y) = toy();
        let fit = lasso_fit(&x, &y, 1e6).unwrap();
        assert_eq!(fit.coef, vec![0.0, 0.0]);
        let at_max = lasso_fit(&x, &y, lambda_max(&x, &y) * (1.0 + 1e-9)).unwrap();
        assert_eq!(at_max.coef, vec![0.0, 0.0]);
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = toy();
        for lambda in [0.0, 0.01, 0.1, 0.5] {
            let fit = lasso_fit(&x, &y, lambda).unwrap();
            assert!(fit.converged);
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = lambda_grid(2.0, 1e-3, 100);
        assert_eq!(g.len(), 100);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[99] - 2e-3).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_input() {
        let (x, y) = toy();
        assert!(lasso_fit(&x, &y[..3], 0.1).is_err());
        assert!(lasso_fit(&x, &y, -1.0).is_err());
        assert!(Design::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn cv_is_deterministic() {
        let (x, y) = toy();
        let a = lasso_cv(&x, &y, 5, 3).unwrap();
        assert_eq!(a, lasso_cv(&x, &y, 5, 3).unwrap());
        assert_eq!(a.lambdas.len(), 100);
    }
}
