use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Utility;
use crate::error::{Error, Result};
use crate::oob::ValueVector;
use crate::rng::{derive_seed, stream_rng};

/// Weights `beta_1..beta_n` on the simplex; `beta_j` multiplies the mean
/// marginal contribution to subsets of size `j - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemivalueWeights {
    beta: Vec<f64>,
}

impl SemivalueWeights {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(Error::InvalidArgument("semivalue weights must be finite and nonnegative".into()));
        }
        let total: f64 = beta.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("semivalue weights sum to {total}, not 1")));
        }
        Ok(Self { beta })
    }

    /// Data Shapley: `beta_j = 1/n`.
    pub fn uniform(n: usize) -> Self {
        Self {
            beta: vec![1.0 / n as f64; n],
        }
    }

    /// Beta Shapley weights for a `Beta(alpha, beta)` prior over the
    /// relative cardinality:
    /// `beta_j = C(n-1, j-1) * B(j - 1 + beta, n - j + alpha) / B(alpha, beta)`,
    /// the beta-binomial mass at `j - 1`. `(16, 1)` favors small subsets.
    pub fn beta_shapley(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n == 0 || alpha <= 0.0 || beta <= 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidArgument("Beta Shapley needs n >= 1 and alpha, beta > 0".into()));
        }
        // log-mass via the ratio P(k+1)/P(k), normalized at the end
        let m = (n - 1) as f64;
        let mut log_p = Vec::with_capacity(n);
        log_p.push(0.0);
        for k in 0..n - 1 {
            let kf = k as f64;
            let r = ((m - kf) / (kf + 1.0)) * ((kf + beta) / (m - kf - 1.0 + alpha));
            log_p.push(log_p[k] + r.ln());
        }
        let top = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = log_p.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        Ok(Self { beta: w })
    }

    /// All mass on a single cardinality `j` (1-based).
    pub fn point_mass(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::InvalidArgument(format!("cardinality {j} outside 1..={n}")));
        }
        let mut beta = vec![0.0; n];
        beta[j - 1] = 1.0;
        Ok(Self { beta })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// One marginal contribution `U(S ∪ {z}) - U(S)` with `|S| = j - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSample {
    pub z: usize,
    pub j: usize,
    pub subset: Vec<usize>,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub chains: usize,
    /// Samples per chain per point before giving up.
    pub max_samples_per_chain: usize,
    /// Chains grow by this many samples between convergence checks.
    pub check_every: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            chains: 10,
            max_samples_per_chain: 100,
            check_every: 10,
            threshold: 1.05,
            seed: 0,
        }
    }
}

/// Draws the `t`-th sample of chain `chain` for point `z`: a cardinality
/// `j` uniform on `1..=n`, then `S` uniform among subsets of the other
/// points with `|S| = j - 1`. Each sample has its own random stream.
pub fn sample_marginal(u: &dyn Utility, z: usize, seed: u64, chain: usize, t: usize) -> MarginalSample {
    let n = u.n();
    let point_seed = derive_seed(seed, "chains", z as u64);
    let chain_seed = derive_seed(point_seed, "chain", chain as u64);
    let mut rng = stream_rng(chain_seed, "sample", t as u64);
    let j = rng.random_range(1..=n);
    let mut subset: Vec<usize> = index::sample(&mut rng, n - 1, j - 1)
        .into_iter()
        .map(|i| if i >= z { i + 1 } else { i })
        .collect();
    subset.sort_unstable();
    let without = u.eval(&subset);
    let pos = subset.partition_point(|&i| i < z);
    subset.insert(pos, z);
    let with = u.eval(&subset);
    subset.remove(pos);
    MarginalSample {
        z,
        j,
        subset,
        delta: with - without,
    }
}

/// Classical potential scale reduction factor over equal-length chains.
///
/// `W` is the mean within-chain variance and `B/m` the variance of chain
/// means (both with `- 1` divisors). `W = 0` gives 1 when the chain means
/// agree and `+inf` otherwise.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("Gelman-Rubin needs at least two chains".into()));
    }
    let m = chains[0].len();
    if m < 2 || chains.iter().any(|c| c.len() != m) {
        return Err(Error::InvalidArgument("chains must share a length of at least two".into()));
    }
    let mf = m as f64;
    let cf = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / mf).collect();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (mf - 1.0))
        .sum::<f64>()
        / cf;
    let grand = means.iter().sum::<f64>() / cf;
    let b_over_m = means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (cf - 1.0);
    if w == 0.0 {
        return Ok(if b_over_m == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok((((mf - 1.0) / mf * w + b_over_m) / w).sqrt())
}

/// Marginal-contribution chains for every point, grown together until the
/// largest Gelman–Rubin statistic falls below the threshold or the budget
/// runs out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSet {
    /// `samples[z][c]` lists `(j, delta)` pairs of chain `c` for point `z`.
    pub samples: Vec<Vec<Vec<(usize, f64)>>>,
    /// Final statistic per point.
    pub r_hat: Vec<f64>,
    pub converged: bool,
    pub samples_per_chain: usize,
    pub evaluations: u64,
}

impl ChainSet {
    pub fn max_r_hat(&self) -> f64 {
        self.r_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn mc_marginal_chains(u: &dyn Utility, cfg: &McConfig) -> Result<ChainSet> {
    let n = u.n();
    if n == 0 {
        return Err(Error::InsufficientRows { needed: 1, available: 0 });
    }
    if cfg.chains < 2 {
        return Err(Error::InvalidArgument("Monte-Carlo semivalues need at least two chains".into()));
    }
    if cfg.check_every < 2 || cfg.max_samples_per_chain < cfg.check_every {
        return Err(Error::InvalidArgument(
            "need check_every >= 2 and max_samples_per_chain >= check_every".into(),
        ));
    }
    let mut samples = vec![vec![Vec::new(); cfg.chains]; n];
    let mut r_hat = vec![f64::INFINITY; n];
    let mut len = 0;
    let mut converged = false;
    while len < cfg.max_samples_per_chain {
        let next = (len + cfg.check_every).min(cfg.max_samples_per_chain);
        let fresh: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
            .into_par_iter()
            .map(|z| {
                (0..cfg.chains)
                    .map(|c| {
                        (len..next)
                            .map(|t| {
                                let s = sample_marginal(u, z, cfg.seed, c, t);
                                (s.j, s.delta)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        for (point, add) in samples.iter_mut().zip(fresh) {
            for (chain, extra) in point.iter_mut().zip(add) {
                chain.extend(extra);
            }
        }
        len = next;
        for (z, point) in samples.iter().enumerate() {
            let deltas: Vec<Vec<f64>> = point.iter().map(|c| c.iter().map(|s| s.1).collect()).collect();
            r_hat[z] = gelman_rubin(&deltas)?;
        }
        if r_hat.iter().all(|&r| r < cfg.threshold) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "Monte-Carlo chains hit the budget of {} samples per chain before reaching R-hat < {}",
            cfg.max_samples_per_chain,
            cfg.threshold
        );
    }
    Ok(ChainSet {
        samples,
        r_hat,
        converged,
        samples_per_chain: len,
        evaluations: 2 * (n * cfg.chains * len) as u64,
    })
}

/// `sum_j beta_j * mean(delta at cardinality j)` for one point. Cardinalities
/// without samples take the overall sample mean; the second return value is
/// true if that happened.
pub fn semivalue_aggregate(samples: &[(usize, f64)], weights: &SemivalueWeights) -> Result<(f64, bool)> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let n = weights.len();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    let mut total = 0.0;
    for &(j, d) in samples {
        if j == 0 || j > n {
            return Err(Error::InvalidArgument(format!("cardinality {j} outside 1..={n}")));
        }
        sums[j - 1] += d;
        counts[j - 1] += 1;
        total += d;
    }
    let overall = total / samples.len() as f64;
    let mut value = 0.0;
    let mut filled = false;
    for ((&b, &s), &c) in weights.as_slice().iter().zip(&sums).zip(&counts) {
        let mean = if c > 0 {
            s / f64::from(c)
        } else {
            if b > 0.0 {
                filled = true;
            }
            overall
        };
        value += b * mean;
    }
    Ok((value, filled))
}

/// Semivalue of every point from pooled chain samples.
pub fn semivalue_values(chains: &ChainSet, weights: &SemivalueWeights) -> Result<ValueVector> {
    let mut psi = Vec::with_capacity(chains.samples.len());
    let mut filled = 0;
    for point in &chains.samples {
        let pooled: Vec<(usize, f64)> = point.iter().flatten().copied().collect();
        let (v, f) = semivalue_aggregate(&pooled, weights)?;
        psi.push(v);
        filled += usize::from(f);
    }
    if filled > 0 {
        log::info!("{filled} points had unsampled cardinalities filled with their overall mean");
    }
    Ok(ValueVector::from_values(psi))
}
