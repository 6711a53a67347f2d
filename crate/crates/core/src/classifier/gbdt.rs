use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{presort, RegressionTree, TreeBuilder, TreeParams};
use super::{Classifier, FeatureMatrix, Prediction, Trainer};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Fraction of rows drawn without replacement for each round.
    pub subsample_fraction: f64,
    /// Added to the hessian sum in every leaf weight.
    pub l2_regularization: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            rounds: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            subsample_fraction: 1.0,
            l2_regularization: 1.0,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidConfig("subsample_fraction must be in (0, 1]".into()));
        }
        if self.l2_regularization.is_nan() || self.l2_regularization < 0.0 {
            return Err(Error::InvalidConfig("l2_regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// Boosted ensemble; `trees[round * n_classes + k]` scores class `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub class_order: Vec<String>,
    pub feature_names: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub trees: Vec<RegressionTree>,
    /// Free-form provenance; ignored by prediction.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Fits a softmax gradient-boosted ensemble.
///
/// Each round fits one least-squares tree per class to the negative gradient
/// `y - p` of the multiclass log-loss, with Newton leaf weights
/// `sum(y - p) / (sum(p (1 - p)) + l2)`. Scores start at zero.
pub fn train(matrix: &FeatureMatrix, hp: &Hyperparameters) -> Result<TrainedModel> {
    hp.validate()?;
    if matrix.n_rows() == 0 || matrix.targets().is_empty() {
        return Err(Error::EmptyTargets);
    }
    if matrix.n_cols() == 0 {
        return Err(Error::SchemaMismatch("no feature columns".into()));
    }
    let class_order: Vec<String> = matrix
        .targets()
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if class_order.len() < 2 {
        return Err(Error::DegenerateTarget(class_order[0].clone()));
    }
    let k = class_order.len();
    let n = matrix.n_rows();
    let y: Vec<usize> = matrix
        .targets()
        .iter()
        .map(|t| class_order.binary_search(t).expect("class from targets"))
        .collect();

    let params = TreeParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        l2: hp.l2_regularization,
    };
    let sorted_all = presort(matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let sample_size = ((n as f64 * hp.subsample_fraction).floor() as usize).clamp(1, n);

    let mut scores = vec![0.0; n * k];
    let mut probs = vec![0.0; n * k];
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let mut in_sample = vec![true; n];
    let mut trees = Vec::with_capacity(hp.rounds * k);

    for _ in 0..hp.rounds {
        for i in 0..n {
            softmax_into(&scores[i * k..(i + 1) * k], &mut probs[i * k..(i + 1) * k]);
        }
        let sorted = if sample_size < n {
            in_sample.iter_mut().for_each(|s| *s = false);
            for i in sample(&mut rng, n, sample_size) {
                in_sample[i] = true;
            }
            sorted_all
                .iter()
                .map(|list| list.iter().copied().filter(|&r| in_sample[r]).collect())
                .collect()
        } else {
            sorted_all.clone()
        };

        let round_start = trees.len();
        for class in 0..k {
            for i in 0..n {
                let p = probs[i * k + class];
                let target = if y[i] == class { 1.0 } else { 0.0 };
                residual[i] = target - p;
                hessian[i] = p * (1.0 - p);
            }
            let tree = TreeBuilder::new(matrix, &residual, &hessian, params).fit(sorted.clone());
            trees.push(tree);
        }
        for i in 0..n {
            let row = matrix.row(i);
            for class in 0..k {
                scores[i * k + class] += hp.learning_rate * trees[round_start + class].predict(row);
            }
        }
    }

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        class_order,
        feature_names: matrix.feature_names().to_vec(),
        hyperparameters: *hp,
        trees,
        metadata: BTreeMap::new(),
    })
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.class_order.len()
    }

    pub fn rounds(&self) -> usize {
        self.trees.len() / self.n_classes().max(1)
    }

    /// Column positions in `rows` for each of the model's features.
    fn column_map(&self, rows: &FeatureMatrix) -> Result<Vec<usize>> {
        self.feature_names
            .iter()
            .map(|name| {
                rows.column_index(name)
                    .ok_or_else(|| Error::SchemaMismatch(format!("input lacks feature `{name}`")))
            })
            .collect()
    }

    fn raw_scores(&self, row: &[f64], out: &mut [f64]) {
        let k = self.n_classes();
        out.iter_mut().for_each(|s| *s = 0.0);
        for (t, tree) in self.trees.iter().enumerate() {
            out[t % k] += self.hyperparameters.learning_rate * tree.predict(row);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(model.format_version));
        }
        let k = model.n_classes();
        if k < 2 || model.trees.len() != model.hyperparameters.rounds * k {
            return Err(Error::SchemaMismatch(format!(
                "{} trees for {} rounds of {k} classes",
                model.trees.len(),
                model.hyperparameters.rounds
            )));
        }
        if let Some(i) = model
            .trees
            .iter()
            .position(|t| !t.is_well_formed(model.feature_names.len()))
        {
            return Err(Error::SchemaMismatch(format!("tree {i} is malformed")));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Class probabilities and the argmax class for every row.
///
/// Columns are matched by name, so extra or reordered columns are fine.
pub fn predict(model: &TrainedModel, rows: &FeatureMatrix) -> Result<Vec<Prediction>> {
    let map = model.column_map(rows)?;
    let k = model.n_classes();
    let mut local = vec![0.0; map.len()];
    let mut scores = vec![0.0; k];
    Ok((0..rows.n_rows())
        .map(|r| {
            let src = rows.row(r);
            for (dst, &c) in local.iter_mut().zip(&map) {
                *dst = src[c];
            }
            model.raw_scores(&local, &mut scores);
            let mut probabilities = vec![0.0; k];
            softmax_into(&scores, &mut probabilities);
            let best = probabilities
                .iter()
                .enumerate()
                .fold(0, |b, (i, p)| if *p > probabilities[b] { i } else { b });
            Prediction {
                class: model.class_order[best].clone(),
                probabilities,
            }
        })
        .collect())
}

/// Total split gain per feature, in the model's feature order.
pub fn feature_importance(model: &TrainedModel) -> Vec<(String, f64)> {
    let mut gains = vec![0.0; model.feature_names.len()];
    for tree in &model.trees {
        for (f, g) in tree.splits() {
            gains[f] += g;
        }
    }
    model.feature_names.iter().cloned().zip(gains).collect()
}

impl Classifier for TrainedModel {
    fn predict_classes(&self, rows: &FeatureMatrix) -> Result<Vec<String>> {
        Ok(predict(self, rows)?.into_iter().map(|p| p.class).collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GbdtTrainer {
    pub hyperparameters: Hyperparameters,
}

impl Trainer for GbdtTrainer {
    type Model = TrainedModel;

    fn fit(&self, data: &FeatureMatrix, seed: u64) -> Result<TrainedModel> {
        train(
            data,
            &Hyperparameters {
                seed,
                ..self.hyperparameters
            },
        )
    }
}
