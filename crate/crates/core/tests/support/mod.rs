//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the code under test beyond plain data accessors.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Fraction of positions where the two sequences agree.
pub fn accuracy_oracle(predicted: &[String], actual: &[String]) -> f64 {
    let mut hits = 0usize;
    for i in 0..actual.len() {
        if predicted[i] == actual[i] {
            hits += 1;
        }
    }
    hits as f64 / actual.len() as f64
}

/// Per-class precision/recall tabulated by direct scans, accumulated over the
/// sorted distinct actual classes.
pub fn weighted_f1_oracle(predicted: &[String], actual: &[String]) -> f64 {
    let n = actual.len();
    let classes: BTreeSet<&String> = actual.iter().collect();
    let mut total = 0.0;
    for c in classes {
        let tp = (0..n).filter(|&i| &predicted[i] == c && &actual[i] == c).count();
        let predicted_c = (0..n).filter(|&i| &predicted[i] == c).count();
        let support = (0..n).filter(|&i| &actual[i] == c).count();
        let precision = if predicted_c == 0 { 0.0 } else { tp as f64 / predicted_c as f64 };
        let recall = tp as f64 / support as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        total += support as f64 / n as f64 * f1;
    }
    total
}

/// Dense power iteration on the column-stochastic matrix of the thresholded
/// weighted graph. `weights` is row-major `n x n`; an edge exists where the
/// weight is at least `binarize_at`. Rows without edges jump uniformly.
pub fn pagerank_oracle(n: usize, weights: &[f64], binarize_at: f64, damping: f64) -> Vec<f64> {
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        let out: f64 = (0..n)
            .filter(|&i| i != j && weights[j * n + i] >= binarize_at)
            .map(|i| weights[j * n + i])
            .sum();
        for i in 0..n {
            m[i][j] = if out > 0.0 {
                if i != j && weights[j * n + i] >= binarize_at {
                    weights[j * n + i] / out
                } else {
                    0.0
                }
            } else {
                1.0 / n as f64
            };
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| (1.0 - damping) / n as f64 + damping * (0..n).map(|j| m[i][j] * r[j]).sum::<f64>())
            .collect();
        let delta: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if delta < 1e-15 {
            break;
        }
    }
    r
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf(z: f64) -> f64 {
    let lo = -12.0;
    if z <= lo {
        return 0.0;
    }
    let steps = 20_000;
    let h = (z - lo) / steps as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(lo) + pdf(z);
    for k in 1..steps {
        let x = lo + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    s * h / 3.0
}
