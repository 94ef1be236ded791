use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Logistic-Gaussian binary classification generator.
///
/// Rows are i.i.d. standard Gaussian; `Y ~ Bernoulli(sigmoid(x . eta))`. The
/// coefficient vector `eta` is drawn once when the config is built and reused
/// for every draw made from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub eta: Vec<f64>,
}

impl SyntheticConfig {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, "synthetic-eta", 0);
        let eta = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        Self { n, d, seed, eta }
    }

    pub fn with_eta(mut self, eta: Vec<f64>) -> Self {
        self.d = eta.len();
        self.eta = eta;
        self
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<TabularDataset> {
    if cfg.n == 0 || cfg.d == 0 {
        return Err(Error::InvalidArgument("synthetic data needs n >= 1 and d >= 1".into()));
    }
    if cfg.eta.len() != cfg.d {
        return Err(Error::InvalidArgument(format!(
            "eta has {} entries for d = {}",
            cfg.eta.len(),
            cfg.d
        )));
    }
    let mut rng = stream_rng(cfg.seed, "synthetic-x", 0);
    let mut features = Vec::with_capacity(cfg.n * cfg.d);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let mut logit = 0.0;
        for e in &cfg.eta {
            let x: f64 = rng.sample(StandardNormal);
            logit += x * e;
            features.push(x);
        }
        let p = 1.0 / (1.0 + (-logit).exp());
        labels.push(usize::from(rng.random::<f64>() < p));
    }
    TabularDataset::new(features, cfg.d, labels, 2)
}
