use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Features examined per node; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_features: None,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn resolved_max_features(&self, d: usize) -> Result<usize> {
        match self.max_features {
            Some(m) if m == 0 || m > d => Err(Error::InvalidArgument(format!(
                "max_features {m} outside 1..={d}"
            ))),
            Some(m) => Ok(m),
            None => Ok(((d as f64).sqrt().floor() as usize).max(1)),
        }
    }
}

/// Column-major feature matrix, shared by every tree of an ensemble.
#[derive(Debug, Clone)]
pub struct ColumnMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl ColumnMatrix {
    pub fn from_dataset(ds: &TabularDataset) -> Self {
        Self {
            n: ds.n_rows(),
            d: ds.n_features(),
            data: ds.columns(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// `counts` is the offset of this leaf's class-count vector.
    Leaf { class: u32, counts: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    leaf_counts: Vec<u32>,
    class_count: usize,
    depth: usize,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Weighted class counts stored at a leaf.
    pub fn leaf_class_counts(&self, node: usize) -> Option<&[u32]> {
        match self.nodes.get(node)? {
            Node::Leaf { counts, .. } => {
                let start = *counts as usize;
                Some(&self.leaf_counts[start..start + self.class_count])
            }
            Node::Split { .. } => None,
        }
    }

    /// Routes a point given by a feature accessor.
    pub fn predict_with(&self, feature: impl Fn(usize) -> f64) -> usize {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx] {
                Node::Leaf { class, .. } => return class as usize,
                Node::Split {
                    feature: f,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if feature(f as usize) <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.predict_with(|j| x[j])
    }

    /// Tree with a single leaf; the class is the first argmax of `counts`.
    pub fn leaf_only(counts: Vec<u32>) -> Self {
        let class = argmax_first(&counts);
        let class_count = counts.len();
        Self {
            nodes: vec![Node::Leaf {
                class: class as u32,
                counts: 0,
            }],
            leaf_counts: counts,
            class_count,
            depth: 0,
        }
    }

    /// Fits on a prebuilt column matrix. Rows with zero weight take no part
    /// in split search or leaf counts.
    pub fn fit_columns(
        cols: &ColumnMatrix,
        labels: &[usize],
        class_count: usize,
        weights: &[u32],
        cfg: &TreeConfig,
    ) -> Result<Self> {
        if weights.len() != cols.n_rows() || labels.len() != cols.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} weights / {} labels for {} rows",
                weights.len(),
                labels.len(),
                cols.n_rows()
            )));
        }
        let rows: Vec<u32> = (0..weights.len())
            .filter(|&i| weights[i] > 0)
            .map(|i| i as u32)
            .collect();
        if rows.is_empty() {
            return Err(Error::ZeroWeights);
        }
        let max_features = cfg.resolved_max_features(cols.n_features())?;
        let mut builder = Builder {
            cols,
            labels,
            weights,
            class_count,
            cfg,
            max_features,
            rows,
            nodes: Vec::new(),
            leaf_counts: Vec::new(),
            depth: 0,
            scratch: Vec::new(),
            left: vec![0; class_count],
            features: (0..cols.n_features()).collect(),
        };
        builder.build();
        Ok(Self {
            nodes: builder.nodes,
            leaf_counts: builder.leaf_counts,
            class_count,
            depth: builder.depth,
        })
    }
}

fn argmax_first<T: PartialOrd + Copy>(counts: &[T]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a> {
    cols: &'a ColumnMatrix,
    labels: &'a [usize],
    weights: &'a [u32],
    class_count: usize,
    cfg: &'a TreeConfig,
    max_features: usize,
    rows: Vec<u32>,
    nodes: Vec<Node>,
    leaf_counts: Vec<u32>,
    depth: usize,
    scratch: Vec<(f64, u32)>,
    left: Vec<u64>,
    features: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn build(&mut self) {
        // (node id, start, end, depth)
        let mut stack = vec![(0usize, 0usize, self.rows.len(), 0usize)];
        self.nodes.push(Node::Leaf { class: 0, counts: 0 });
        while let Some((id, start, end, depth)) = stack.pop() {
            self.depth = self.depth.max(depth);
            let counts = self.class_totals(start, end);
            let total: u64 = counts.iter().sum();
            let nonzero = counts.iter().filter(|&&c| c > 0).count();
            let stop = nonzero <= 1
                || total < self.cfg.min_samples_split as u64
                || self.cfg.max_depth.is_some_and(|m| depth >= m);
            let split = if stop { None } else { self.best_split(id, start, end, &counts, total) };
            match split {
                None => self.make_leaf(id, &counts),
                Some(best) => {
                    let mid = self.partition(start, end, best.feature, best.threshold);
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf { class: 0, counts: 0 });
                    self.nodes.push(Node::Leaf { class: 0, counts: 0 });
                    self.nodes[id] = Node::Split {
                        feature: best.feature as u32,
                        threshold: best.threshold,
                        left: left as u32,
                        right: (left + 1) as u32,
                    };
                    stack.push((left + 1, mid, end, depth + 1));
                    stack.push((left, start, mid, depth + 1));
                }
            }
        }
    }

    fn class_totals(&self, start: usize, end: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.class_count];
        for &r in &self.rows[start..end] {
            counts[self.labels[r as usize]] += u64::from(self.weights[r as usize]);
        }
        counts
    }

    fn make_leaf(&mut self, id: usize, counts: &[u64]) {
        let offset = self.leaf_counts.len() as u32;
        self.leaf_counts.extend(counts.iter().map(|&c| c as u32));
        self.nodes[id] = Node::Leaf {
            class: argmax_first(counts) as u32,
            counts: offset,
        };
    }

    /// Features are visited in a node-local random order. Constant features do
    /// not count against `max_features`, so a node keeps looking until it has
    /// examined that many non-constant features or run out.
    fn best_split(
        &mut self,
        id: usize,
        start: usize,
        end: usize,
        counts: &[u64],
        total: u64,
    ) -> Option<BestSplit> {
        let parent_score = gini_proxy(counts, total as f64);
        let mut best: Option<BestSplit> = None;
        let mut rng = stream_rng(self.cfg.seed, "node", id as u64);
        let d = self.features.len();
        for (k, f) in self.features.iter_mut().enumerate() {
            *f = k;
        }
        let mut informative = 0;
        for k in 0..d {
            if informative >= self.max_features {
                break;
            }
            let pick = rng.random_range(k..d);
            self.features.swap(k, pick);
            let feature = self.features[k];
            let Some(candidate) = self.scan_feature(feature, start, end, counts, total) else {
                continue;
            };
            informative += 1;
            let better = match &best {
                None => true,
                Some(b) => {
                    candidate.score > b.score
                        || (candidate.score == b.score && candidate.feature < b.feature)
                }
            };
            if better {
                best = Some(candidate);
            }
        }
        best.filter(|b| b.score > parent_score * (1.0 + 1e-12))
    }

    /// Best threshold on one feature, or `None` if the feature is constant
    /// within the node.
    fn scan_feature(
        &mut self,
        feature: usize,
        start: usize,
        end: usize,
        counts: &[u64],
        total: u64,
    ) -> Option<BestSplit> {
        let col = self.cols.col(feature);
        self.scratch.clear();
        self.scratch
            .extend(self.rows[start..end].iter().map(|&r| (col[r as usize], r)));
        let (lo, hi) = self
            .scratch
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(v, _)| {
                (lo.min(v), hi.max(v))
            });
        if lo >= hi {
            return None;
        }
        self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        self.left.iter_mut().for_each(|c| *c = 0);
        let mut left_total = 0u64;
        let mut best_score = f64::NEG_INFINITY;
        let mut best_pos = 0;
        let last = self.scratch.len() - 1;
        for pos in 0..last {
            let (v, r) = self.scratch[pos];
            let w = u64::from(self.weights[r as usize]);
            self.left[self.labels[r as usize]] += w;
            left_total += w;
            let next = self.scratch[pos + 1].0;
            if v < next {
                let right_total = total - left_total;
                let mut score = 0.0;
                let (lt, rt) = (left_total as f64, right_total as f64);
                for (l, c) in self.left.iter().zip(counts) {
                    let l = *l as f64;
                    let r = (*c as f64) - l;
                    score += l * l / lt + r * r / rt;
                }
                if score > best_score {
                    best_score = score;
                    best_pos = pos;
                }
            }
        }
        let (a, b) = (self.scratch[best_pos].0, self.scratch[best_pos + 1].0);
        let mut threshold = a + (b - a) / 2.0;
        if threshold >= b {
            threshold = a;
        }
        Some(BestSplit {
            feature,
            threshold,
            score: best_score,
        })
    }

    fn partition(&mut self, start: usize, end: usize, feature: usize, threshold: f64) -> usize {
        let col = self.cols.col(feature);
        let slice = &mut self.rows[start..end];
        let mut mid = 0;
        for k in 0..slice.len() {
            if col[slice[k] as usize] <= threshold {
                slice.swap(mid, k);
                mid += 1;
            }
        }
        start + mid
    }
}

/// Sum over classes of `count^2 / total`. Weighted Gini impurity of a node is
/// `total - proxy`, so maximizing the children's summed proxy minimizes the
/// children's summed weighted impurity.
fn gini_proxy(counts: &[u64], total: f64) -> f64 {
    counts.iter().map(|&c| (c as f64) * (c as f64) / total).sum()
}

/// Fits a CART classifier with integer sample weights (bootstrap counts).
pub fn fit_tree(
    train: &TabularDataset,
    sample_weights: &[u32],
    cfg: &TreeConfig,
) -> Result<DecisionTree> {
    let cols = ColumnMatrix::from_dataset(train);
    DecisionTree::fit_columns(&cols, train.labels(), train.class_count(), sample_weights, cfg)
}

pub fn predict_tree(tree: &DecisionTree, x: &[f64]) -> usize {
    tree.predict(x)
}
