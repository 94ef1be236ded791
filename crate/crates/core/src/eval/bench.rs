use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{default_k, knn_shapley};
use crate::data::{generate_synthetic, SyntheticConfig};
use crate::error::{Error, Result};
use crate::forest::TreeConfig;
use crate::oob::{data_oob_values, fit_and_score, ScoreFunction};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    /// Ensemble training, scoring and value aggregation.
    Dataoob,
    /// Validation set of `0.1 n` points, `k = 0.1 n`.
    KnnShapley,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dataoob => "dataoob",
            Self::KnnShapley => "knn-shapley",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub methods: Vec<BenchMethod>,
    pub n_grid: Vec<usize>,
    pub d: usize,
    pub b: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// A run longer than this marks the record censored and skips larger `n`
    /// for that method.
    pub timeout_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: BenchMethod,
    pub n: usize,
    pub d: usize,
    pub b: usize,
    pub repetitions: usize,
    pub seconds: Vec<f64>,
    pub mean_secs: f64,
    /// Normal-approximation 95% half-width of the mean.
    pub half_width: f64,
    pub censored: bool,
}

fn run_once(method: BenchMethod, n: usize, d: usize, b: usize, seed: u64) -> Result<f64> {
    match method {
        BenchMethod::Dataoob => {
            let train = generate_synthetic(&SyntheticConfig::new(n, d, seed))?;
            let start = Instant::now();
            let run = fit_and_score(&train, b, &TreeConfig::with_seed(derive_seed(seed, "forest", 0)), ScoreFunction::Correctness)?;
            let values = data_oob_values(&run.scores);
            std::hint::black_box(values);
            Ok(start.elapsed().as_secs_f64())
        }
        BenchMethod::KnnShapley => {
            let m = ((n as f64) * 0.1).round().max(1.0) as usize;
            let all = generate_synthetic(&SyntheticConfig::new(n + m, d, seed))?;
            let train = all.subset(&(0..n).collect::<Vec<_>>());
            let val = all.subset(&(n..n + m).collect::<Vec<_>>());
            let start = Instant::now();
            let values = knn_shapley(&train, &val, default_k(n))?;
            std::hint::black_box(values);
            Ok(start.elapsed().as_secs_f64())
        }
    }
}

/// Times each method serially over the grid. Data generation is excluded
/// from the clock; ensemble training is included.
pub fn bench_timing(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    if spec.repetitions == 0 || spec.n_grid.is_empty() {
        return Err(Error::InvalidArgument("bench needs repetitions >= 1 and a nonempty n grid".into()));
    }
    let mut records = Vec::new();
    for &method in &spec.methods {
        for &n in &spec.n_grid {
            let mut seconds = Vec::with_capacity(spec.repetitions);
            let mut censored = false;
            for rep in 0..spec.repetitions {
                let secs = run_once(method, n, spec.d, spec.b, derive_seed(spec.seed, "bench", rep as u64))?;
                log::info!("bench {} n={n} rep={rep}: {secs:.3}s", method.name());
                seconds.push(secs);
                if spec.timeout_secs.is_some_and(|t| secs > t) {
                    censored = true;
                    break;
                }
            }
            let r = seconds.len() as f64;
            let mean = seconds.iter().sum::<f64>() / r;
            let half_width = if seconds.len() < 2 {
                0.0
            } else {
                let var = seconds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (r - 1.0);
                1.96 * (var / r).sqrt()
            };
            records.push(BenchRecord {
                method,
                n,
                d: spec.d,
                b: spec.b,
                repetitions: seconds.len(),
                seconds,
                mean_secs: mean,
                half_width,
                censored,
            });
            if censored {
                break;
            }
        }
    }
    Ok(records)
}

/// Least-squares slope of `ln(time)` against `ln(n)`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(n, t)| n == 0 || t <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
