//! Multiclass gradient-boosted trees, the majority baseline, and the
//! feature matrix they consume.

mod gbdt;
mod majority;
mod tree;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gbdt::{feature_importance, predict, train, GbdtTrainer, Hyperparameters, TrainedModel, MODEL_FORMAT_VERSION};
pub use majority::{group_vote, majority_predict, majority_train, MajorityModel, MajorityTrainer};
pub use tree::RegressionTree;

/// Row-major feature table with optional targets.
///
/// Each row is one (entity, window) instance; `group_keys` holds the window
/// index so folds can keep a window's rows together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    values: Vec<f64>,
    targets: Vec<String>,
    group_keys: Vec<usize>,
}

impl FeatureMatrix {
    /// `targets` may be empty for prediction-only matrices.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<String>,
        group_keys: Vec<usize>,
    ) -> Result<Self> {
        let n_cols = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has {} values for {n_cols} columns",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(feature_names, values, targets, group_keys)
    }

    pub fn from_flat(
        feature_names: Vec<String>,
        values: Vec<f64>,
        targets: Vec<String>,
        group_keys: Vec<usize>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::SchemaMismatch(format!("duplicate column `{dup}`")));
        }
        let n_cols = feature_names.len();
        let n_rows = values.len().checked_div(n_cols).unwrap_or(group_keys.len());
        if n_cols > 0 && values.len() % n_cols != 0 {
            return Err(Error::SchemaMismatch("ragged value buffer".into()));
        }
        if group_keys.len() != n_rows || !(targets.is_empty() || targets.len() == n_rows) {
            return Err(Error::SchemaMismatch(format!(
                "{n_rows} rows but {} group keys and {} targets",
                group_keys.len(),
                targets.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                feature: feature_names[pos % n_cols].clone(),
                row: pos / n_cols,
            });
        }
        Ok(FeatureMatrix {
            feature_names,
            values,
            targets,
            group_keys,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.group_keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn has_targets(&self) -> bool {
        !self.targets.is_empty() || self.n_rows() == 0
    }

    pub fn group_keys(&self) -> &[usize] {
        &self.group_keys
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            values,
            targets: if self.targets.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.targets[i].clone()).collect()
            },
            group_keys: indices.iter().map(|&i| self.group_keys[i]).collect(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("no column `{n}`")))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_rows() * idx.len());
        for r in 0..self.n_rows() {
            let row = self.row(r);
            values.extend(idx.iter().map(|&c| row[c]));
        }
        Ok(FeatureMatrix {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            values,
            targets: self.targets.clone(),
            group_keys: self.group_keys.clone(),
        })
    }

    /// Drops the targets, for prediction inputs.
    pub fn without_targets(&self) -> FeatureMatrix {
        FeatureMatrix {
            targets: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: String,
    /// Aligned with the model's class order.
    pub probabilities: Vec<f64>,
}

/// A fitted model that labels feature rows.
pub trait Classifier: Send + Sync {
    fn predict_classes(&self, rows: &FeatureMatrix) -> Result<Vec<String>>;
}

/// Fits a [`Classifier`]; `seed` drives any randomness in fitting.
pub trait Trainer: Sync {
    type Model: Classifier;

    fn fit(&self, data: &FeatureMatrix, seed: u64) -> Result<Self::Model>;
}
