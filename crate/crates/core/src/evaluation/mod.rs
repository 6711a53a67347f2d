//! Window-blocked k-fold cross-validation with accuracy and weighted F1.

mod folds;
mod metrics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, FeatureMatrix, Trainer};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub use folds::{kfold_split, FoldStrategy};
pub use metrics::{accuracy, weighted_f1, ConfusionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    WeightedF1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::WeightedF1 => "weighted_f1",
        }
    }

    fn score(self, predicted: &[String], actual: &[String]) -> Result<f64> {
        match self {
            Metric::Accuracy => accuracy(predicted, actual),
            Metric::WeightedF1 => weighted_f1(predicted, actual),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationProtocol {
    pub k: usize,
    pub fold_strategy: FoldStrategy,
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl Default for EvaluationProtocol {
    fn default() -> Self {
        EvaluationProtocol {
            k: 10,
            fold_strategy: FoldStrategy::ContiguousBlocks,
            seed: 0,
            metrics: vec![Metric::Accuracy, Metric::WeightedF1],
        }
    }
}

impl EvaluationProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k must be at least 2, got {}", self.k)));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("at least one metric is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub per_fold: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

impl MetricReport {
    pub fn from_folds(metric: Metric, per_fold: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&per_fold);
        MetricReport {
            metric,
            per_fold,
            mean,
            std,
        }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub train_rows: usize,
    pub test_rows: usize,
    pub predicted: Vec<String>,
    pub actual: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub metrics: Vec<MetricReport>,
    /// Pooled over all test folds.
    pub confusion_matrix: ConfusionMatrix,
    pub folds: Vec<FoldOutcome>,
}

impl CvReport {
    pub fn metric(&self, metric: Metric) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

/// Trains on each fold's complement and scores on the fold.
///
/// Folds run in parallel; fold `i` fits with a seed derived from
/// `(protocol.seed, i)` and results are collected in fold order.
pub fn cross_validate<T: Trainer>(matrix: &FeatureMatrix, protocol: &EvaluationProtocol, trainer: &T) -> Result<CvReport> {
    protocol.validate()?;
    if !matrix.has_targets() || matrix.n_rows() == 0 {
        return Err(Error::EmptyTargets);
    }
    let folds = kfold_split(matrix.group_keys(), matrix.targets(), protocol.k, protocol.fold_strategy, protocol.seed)?;
    let outcomes: Vec<FoldOutcome> = (0..folds.len())
        .into_par_iter()
        .map(|i| run_fold(matrix, &folds, i, protocol.seed, trainer).map_err(|e| Error::Fold { fold: i, source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let mut confusion = ConfusionMatrix::new(Vec::new());
    for o in &outcomes {
        confusion.add(&o.predicted, &o.actual);
    }
    let metrics = protocol
        .metrics
        .iter()
        .map(|&m| {
            let per_fold = outcomes
                .iter()
                .map(|o| m.score(&o.predicted, &o.actual))
                .collect::<Result<Vec<_>>>()?;
            Ok(MetricReport::from_folds(m, per_fold))
        })
        .collect::<Result<_>>()?;
    Ok(CvReport {
        metrics,
        confusion_matrix: confusion,
        folds: outcomes,
    })
}

fn run_fold<T: Trainer>(matrix: &FeatureMatrix, folds: &[Vec<usize>], i: usize, seed: u64, trainer: &T) -> Result<FoldOutcome> {
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .flat_map(|(_, f)| f.iter().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let train = matrix.subset(&train_idx);
    let test = matrix.subset(&folds[i]);
    let model = trainer.fit(&train, derive_seed(seed, i as u64))?;
    let predicted = model.predict_classes(&test.without_targets())?;
    Ok(FoldOutcome {
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        predicted,
        actual: test.targets().to_vec(),
    })
}
