use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths<T>(predicted: &[T], actual: &[T]) -> Result<()> {
    if predicted.len() != actual.len() || actual.is_empty() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(predicted: &[T], actual: &[T]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Support-weighted mean of per-class F1 over the classes present in `actual`.
///
/// Precision and recall with an empty denominator are 0, and so is F1 when
/// both are 0.
pub fn weighted_f1<T: Ord + Clone>(predicted: &[T], actual: &[T]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let cm = ConfusionMatrix::from_pairs(predicted, actual);
    Ok(cm.weighted_f1())
}

/// Counts with rows indexed by actual class and columns by predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix<T = String> {
    pub labels: Vec<T>,
    pub counts: Vec<Vec<usize>>,
}

impl<T: Ord + Clone> ConfusionMatrix<T> {
    pub fn new(labels: Vec<T>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_pairs(predicted: &[T], actual: &[T]) -> Self {
        let labels: BTreeSet<T> = predicted.iter().chain(actual).cloned().collect();
        let mut cm = Self::new(labels.into_iter().collect());
        cm.add(predicted, actual);
        cm
    }

    /// Adds pairs, growing the label set as needed (kept sorted).
    pub fn add(&mut self, predicted: &[T], actual: &[T]) {
        for label in predicted.iter().chain(actual) {
            if let Err(pos) = self.labels.binary_search(label) {
                self.labels.insert(pos, label.clone());
                for row in &mut self.counts {
                    row.insert(pos, 0);
                }
                self.counts.insert(pos, vec![0; self.labels.len()]);
            }
        }
        for (p, a) in predicted.iter().zip(actual) {
            let i = self.labels.binary_search(a).expect("inserted");
            let j = self.labels.binary_search(p).expect("inserted");
            self.counts[i][j] += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn weighted_f1(&self) -> f64 {
        let n = self.labels.len();
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut score = 0.0;
        for c in 0..n {
            let support: usize = self.counts[c].iter().sum();
            if support == 0 {
                continue;
            }
            let tp = self.counts[c][c] as f64;
            let predicted: usize = (0..n).map(|r| self.counts[r][c]).sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = tp / support as f64;
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            score += support as f64 / total as f64 * f1;
        }
        score
    }

    pub fn class_counts(&self) -> BTreeMap<T, usize> {
        self.labels
            .iter()
            .cloned()
            .zip(self.counts.iter().map(|r| r.iter().sum()))
            .collect()
    }
}
