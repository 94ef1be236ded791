use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense feature matrix with integer class labels.
///
/// Features are stored row-major. Labels are dense class indices in
/// `0..class_count`; `class_count` is kept when taking subsets so that a
/// subset missing some class still shares the label space of its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    class_count: usize,
    feature_names: Option<Vec<String>>,
    class_names: Option<Vec<String>>,
}

impl TabularDataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one feature".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::InvalidArgument(format!(
                "feature matrix has {} entries, expected {} rows x {} columns",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if class_count < 2 {
            return Err(Error::SingleClass(class_count));
        }
        if let Some(pos) = labels.iter().position(|&y| y >= class_count) {
            return Err(Error::InvalidArgument(format!(
                "label {} at row {} is outside 0..{}",
                labels[pos], pos, class_count
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_features,
                column: pos % n_features,
            });
        }
        Ok(Self {
            features,
            labels,
            n_features,
            class_count,
            feature_names: None,
            class_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::InvalidArgument(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        self.class_names = Some(names);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    /// Column-major copy of the feature matrix.
    pub fn columns(&self) -> Vec<f64> {
        let n = self.n_rows();
        let mut cols = vec![0.0; self.features.len()];
        for i in 0..n {
            for j in 0..self.n_features {
                cols[j * n + i] = self.features[i * self.n_features + j];
            }
        }
        cols
    }

    /// Rows in the given order (indices may repeat).
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features,
            labels,
            n_features: self.n_features,
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same features with a replacement label vector.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_rows()
            )));
        }
        if let Some(pos) = labels.iter().position(|&y| y >= self.class_count) {
            return Err(Error::InvalidArgument(format!("label out of range at row {pos}")));
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    pub(crate) fn with_features_unchecked(&self, features: Vec<f64>) -> Self {
        debug_assert_eq!(features.len(), self.features.len());
        Self {
            features,
            ..self.clone()
        }
    }

    /// Per-class row counts.
    pub fn class_frequencies(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// SHA-256 over shape, class count, feature bits and labels.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_rows() as u64).to_le_bytes());
        hasher.update((self.n_features as u64).to_le_bytes());
        hasher.update((self.class_count as u64).to_le_bytes());
        for v in &self.features {
            hasher.update(v.to_bits().to_le_bytes());
        }
        for &y in &self.labels {
            hasher.update((y as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
