//! Per-window proximity networks and the node features derived from them.
//!
//! Edge weights are co-location fractions: of the timestamps where both
//! entities have an original (non-interpolated) fix, the share at which they
//! are within `threshold` meters. Binary adjacency is `weight >= binarize_at`.

mod features;
mod pagerank;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Window;
use crate::trajectory::{Fix, TrajectorySet};

pub use features::{
    degree_features, neighbor_average, network_features, DegreeFeatures, NeighborMean,
    NetworkFeatures,
};
pub use pagerank::{pagerank, PageRankConfig, PageRankResult};

pub const DEFAULT_THRESHOLD_M: f64 = 2.0;
pub const DEFAULT_BINARIZE_AT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProximityConfig {
    /// Distance in meters at or below which two entities are in contact.
    pub threshold: f64,
    pub binarize_at: f64,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig {
            threshold: DEFAULT_THRESHOLD_M,
            binarize_at: DEFAULT_BINARIZE_AT,
        }
    }
}

impl ProximityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "proximity threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.binarize_at > 0.0 && self.binarize_at <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "binarize_at must be in (0, 1], got {}",
                self.binarize_at
            )));
        }
        Ok(())
    }
}

/// Weighted undirected graph over the entities of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityGraph {
    nodes: Vec<String>,
    /// Dense row-major `n x n`, symmetric, zero diagonal.
    weights: Vec<f64>,
    threshold: f64,
    binarize_at: f64,
}

impl ProximityGraph {
    /// Builds a graph from explicit weights. The matrix must be symmetric with
    /// entries in `[0, 1]`; the diagonal is ignored.
    pub fn from_weights(nodes: Vec<String>, mut weights: Vec<f64>, config: ProximityConfig) -> Result<Self> {
        config.validate()?;
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "expected {} weights for {n} nodes, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            weights[i * n + i] = 0.0;
            for j in 0..i {
                let (a, b) = (weights[i * n + j], weights[j * n + i]);
                if a != b || !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidConfig(format!(
                        "weight ({i},{j}) must be symmetric and in [0,1]"
                    )));
                }
            }
        }
        Ok(ProximityGraph {
            nodes,
            weights,
            threshold: config.threshold,
            binarize_at: config.binarize_at,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn binarize_at(&self) -> f64 {
        self.binarize_at
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.weight(i, j) >= self.binarize_at
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.adjacent(i, j))
    }

    /// Writes `src,dst,weight` for every pair `i < j` with a positive weight.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["src", "dst", "weight"])?;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let w = self.weight(i, j);
                if w > 0.0 {
                    csv.write_record([self.nodes[i].as_str(), self.nodes[j].as_str(), &format!("{w:?}")])?;
                }
            }
        }
        csv.flush().map_err(|e| Error::io("<edge list>", e))?;
        Ok(())
    }
}

/// Contact fraction between two time-sorted fix slices.
fn contact_fraction(a: &[Fix], b: &[Fix], threshold: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut both, mut close) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let (fa, fb) = (&a[i], &b[j]);
        match fa.timestamp.cmp(&fb.timestamp) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if fa.valid && fb.valid {
                    both += 1;
                    if fa.distance(fb) <= threshold {
                        close += 1;
                    }
                }
                i += 1;
                j += 1;
            }
        }
    }
    if both == 0 {
        0.0
    } else {
        close as f64 / both as f64
    }
}

pub fn build_network(trajectories: &TrajectorySet, window: &Window, config: ProximityConfig) -> Result<ProximityGraph> {
    config.validate()?;
    let n = trajectories.len();
    let slices: Vec<&[Fix]> = trajectories
        .entities()
        .iter()
        .enumerate()
        .map(|(i, e)| window.slice(i, e))
        .collect();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let w = contact_fraction(slices[i], slices[j], config.threshold);
            weights[i * n + j] = w;
            weights[j * n + i] = w;
        }
    }
    Ok(ProximityGraph {
        nodes: trajectories.entity_ids().map(str::to_string).collect(),
        weights,
        threshold: config.threshold,
        binarize_at: config.binarize_at,
    })
}
