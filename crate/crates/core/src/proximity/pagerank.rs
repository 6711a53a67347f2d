use serde::{Deserialize, Serialize};

use super::ProximityGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageRankConfig {
    pub damping: f64,
    /// Stop once the l1 change between iterates is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

impl PageRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "pagerank damping must be in (0, 1), got {}",
                self.damping
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("pagerank tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankResult {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// `false` when `max_iterations` was reached before the tolerance.
    pub converged: bool,
    /// l1 change of the final iteration.
    pub residual: f64,
}

/// Weighted PageRank over the binary-adjacent edges of `graph`.
///
/// Mass moves along adjacent edges in proportion to their weights; nodes with
/// no adjacent edge spread their mass uniformly. Scores sum to one.
pub fn pagerank(graph: &ProximityGraph, config: &PageRankConfig) -> Result<PageRankResult> {
    config.validate()?;
    let n = graph.len();
    if n == 0 {
        return Ok(PageRankResult {
            scores: Vec::new(),
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    // Incoming edge lists: for node i, (j, w_ji / strength_j).
    let strength: Vec<f64> = (0..n)
        .map(|j| graph.neighbors(j).map(|i| graph.weight(j, i)).sum())
        .collect();
    let incoming: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            graph
                .neighbors(i)
                .map(|j| (j, graph.weight(j, i) / strength[j]))
                .collect()
        })
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&j| strength[j] <= 0.0).collect();

    let d = config.damping;
    let teleport = (1.0 - d) / n as f64;
    let mut rank = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < config.max_iterations {
        iterations += 1;
        let dangling_mass: f64 = dangling.iter().map(|&j| rank[j]).sum();
        let base = teleport + d * dangling_mass / n as f64;
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = base + d * incoming[i].iter().map(|&(j, p)| p * rank[j]).sum::<f64>();
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual <= config.tolerance {
            break;
        }
    }
    Ok(PageRankResult {
        scores: rank,
        iterations,
        converged: residual <= config.tolerance,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximity::ProximityConfig;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> ProximityGraph {
        let mut w = vec![0.0; n * n];
        for &(i, j, x) in edges {
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
        ProximityGraph::from_weights((0..n).map(|i| format!("n{i}")).collect(), w, ProximityConfig::default()).unwrap()
    }

    #[test]
    fn single_node() {
        let r = pagerank(&graph(1, &[]), &PageRankConfig::default()).unwrap();
        assert_eq!(r.scores, vec![1.0]);
        assert!(r.converged);
    }

    #[test]
    fn triangle_is_uniform() {
        let r = pagerank(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]), &PageRankConfig::default()).unwrap();
        for s in r.scores {
            assert!((s - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_of_three() {
        // Ends: a = 0.05 + 0.85 b / 2, middle: b = 0.05 + 0.85 (a + c), c = a.
        // Solving gives a = c = 19/74 and b = 36/74.
        let r = pagerank(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]), &PageRankConfig::default()).unwrap();
        assert!((r.scores[0] - 19.0 / 74.0).abs() < 1e-9);
        assert!((r.scores[1] - 36.0 / 74.0).abs() < 1e-9);
        assert!((r.scores[2] - 19.0 / 74.0).abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn flags_non_convergence() {
        let cfg = PageRankConfig { max_iterations: 2, tolerance: 1e-15, ..Default::default() };
        let r = pagerank(&graph(3, &[(0, 1, 1.0)]), &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_damping() {
        let cfg = PageRankConfig { damping: 1.0, ..Default::default() };
        assert!(pagerank(&graph(2, &[]), &cfg).is_err());
    }
}
