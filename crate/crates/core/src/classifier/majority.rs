use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Classifier, FeatureMatrix, Prediction, Trainer};
use crate::error::{Error, Result};

/// Always predicts the most frequent training class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub class: String,
    /// Sorted distinct training classes.
    pub class_order: Vec<String>,
}

/// Ties go to the earliest class in sorted order.
pub fn majority_train<S: AsRef<str>>(targets: &[S]) -> Result<MajorityModel> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in targets {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let (class, _) = counts
        .iter()
        .fold(None::<(&str, usize)>, |best, (&c, &n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((c, n)),
        })
        .expect("non-empty");
    Ok(MajorityModel {
        class: class.to_string(),
        class_order: counts.keys().map(|c| c.to_string()).collect(),
    })
}

pub fn majority_predict(model: &MajorityModel, row_count: usize) -> Vec<String> {
    vec![model.class.clone(); row_count]
}

impl Classifier for MajorityModel {
    fn predict_classes(&self, rows: &FeatureMatrix) -> Result<Vec<String>> {
        Ok(majority_predict(self, rows.n_rows()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityTrainer;

impl Trainer for MajorityTrainer {
    type Model = MajorityModel;

    fn fit(&self, data: &FeatureMatrix, _seed: u64) -> Result<MajorityModel> {
        majority_train(data.targets())
    }
}

/// Group-level readout of per-entity predictions for one window.
///
/// Most votes wins; ties go to the larger summed probability, then to the
/// earlier class in `class_order`.
pub fn group_vote(predictions: &[Prediction], class_order: &[String]) -> Result<String> {
    if predictions.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let mut votes = vec![0usize; class_order.len()];
    let mut mass = vec![0.0f64; class_order.len()];
    for p in predictions {
        let idx = class_order
            .iter()
            .position(|c| *c == p.class)
            .ok_or_else(|| Error::SchemaMismatch(format!("class `{}` not in class order", p.class)))?;
        votes[idx] += 1;
        for (m, q) in mass.iter_mut().zip(&p.probabilities) {
            *m += q;
        }
    }
    let best = (0..class_order.len()).fold(0, |b, i| {
        if votes[i] > votes[b] || (votes[i] == votes[b] && mass[i] > mass[b]) {
            i
        } else {
            b
        }
    });
    Ok(class_order[best].clone())
}
