use serde::{Deserialize, Serialize};

use super::pagerank::{pagerank, PageRankConfig};
use super::ProximityGraph;
use crate::error::Result;
use crate::kinematics::KinematicFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeFeatures {
    pub degree: usize,
    pub weighted_degree: f64,
}

pub fn degree_features(graph: &ProximityGraph) -> Vec<DegreeFeatures> {
    (0..graph.len())
        .map(|i| DegreeFeatures {
            degree: graph.neighbors(i).count(),
            weighted_degree: (0..graph.len())
                .filter(|&j| j != i)
                .map(|j| graph.weight(i, j))
                .sum(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborMean {
    /// Per-dimension mean over adjacent neighbors; zero when isolated.
    pub mean: KinematicFeatures,
    pub isolated: bool,
}

pub fn neighbor_average(graph: &ProximityGraph, features: &[KinematicFeatures]) -> Vec<NeighborMean> {
    assert_eq!(features.len(), graph.len(), "one feature vector per node");
    (0..graph.len())
        .map(|i| {
            let mut sum = [0.0; 8];
            let mut count = 0usize;
            for j in graph.neighbors(i) {
                for (s, v) in sum.iter_mut().zip(features[j].to_array()) {
                    *s += v;
                }
                count += 1;
            }
            if count == 0 {
                NeighborMean {
                    mean: KinematicFeatures::default(),
                    isolated: true,
                }
            } else {
                sum.iter_mut().for_each(|s| *s /= count as f64);
                NeighborMean {
                    mean: KinematicFeatures::from_array(sum),
                    isolated: false,
                }
            }
        })
        .collect()
}

/// Everything the classifier sees about a node's place in the window's network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkFeatures {
    pub degree: usize,
    pub weighted_degree: f64,
    pub pagerank: f64,
    pub neighbor_mean: KinematicFeatures,
    pub isolated: bool,
}

impl NetworkFeatures {
    /// Column names in the order of [`NetworkFeatures::to_vec`].
    pub fn names() -> Vec<String> {
        let mut names: Vec<String> = ["degree", "weighted_degree", "pagerank", "isolated"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        names.extend(KinematicFeatures::NAMES.iter().map(|n| format!("neighbor_{n}")));
        names
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![
            self.degree as f64,
            self.weighted_degree,
            self.pagerank,
            if self.isolated { 1.0 } else { 0.0 },
        ];
        v.extend(self.neighbor_mean.to_array());
        v
    }
}

pub fn network_features(
    graph: &ProximityGraph,
    kinematics: &[KinematicFeatures],
    config: &PageRankConfig,
) -> Result<Vec<NetworkFeatures>> {
    let degrees = degree_features(graph);
    let ranks = pagerank(graph, config)?;
    let neighbors = neighbor_average(graph, kinematics);
    Ok(degrees
        .into_iter()
        .zip(ranks.scores)
        .zip(neighbors)
        .map(|((d, pr), nb)| NetworkFeatures {
            degree: d.degree,
            weighted_degree: d.weighted_degree,
            pagerank: pr,
            neighbor_mean: nb.mean,
            isolated: nb.isolated,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximity::ProximityConfig;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> ProximityGraph {
        let mut w = vec![0.0; n * n];
        for &(i, j, x) in edges {
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
        ProximityGraph::from_weights((0..n).map(|i| format!("n{i}")).collect(), w, ProximityConfig::default()).unwrap()
    }

    fn kin(a: f64, b: f64) -> KinematicFeatures {
        KinematicFeatures { mean_speed: a, std_speed: b, ..Default::default() }
    }

    #[test]
    fn complete_triangle() {
        let d = degree_features(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]));
        assert!(d.iter().all(|x| x.degree == 2 && x.weighted_degree == 2.0));
    }

    #[test]
    fn empty_graph() {
        let d = degree_features(&graph(4, &[]));
        assert!(d.iter().all(|x| x.degree == 0 && x.weighted_degree == 0.0));
    }

    #[test]
    fn path_degrees() {
        let d = degree_features(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]));
        let deg: Vec<usize> = d.iter().map(|x| x.degree).collect();
        assert_eq!(deg, vec![1, 2, 1]);
    }

    #[test]
    fn weak_edges_count_only_in_weighted_degree() {
        let d = degree_features(&graph(2, &[(0, 1, 0.3)]));
        assert_eq!(d[0].degree, 0);
        assert_eq!(d[0].weighted_degree, 0.3);
    }

    #[test]
    fn neighbor_mean_is_arithmetic() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 1.0)]);
        let nb = neighbor_average(&g, &[kin(0.0, 0.0), kin(2.0, 4.0), kin(4.0, 6.0)]);
        assert_eq!((nb[0].mean.mean_speed, nb[0].mean.std_speed), (3.0, 5.0));
        assert!(!nb[0].isolated);
    }

    #[test]
    fn isolated_node_gets_zero_vector() {
        let g = graph(3, &[(0, 1, 1.0)]);
        let nb = neighbor_average(&g, &[kin(1.0, 1.0), kin(2.0, 2.0), kin(3.0, 3.0)]);
        assert!(nb[2].isolated);
        assert_eq!(nb[2].mean, KinematicFeatures::default());
    }

    #[test]
    fn identical_features_propagate() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 0.7), (2, 3, 0.9)]);
        let v = KinematicFeatures::from_array([1.5, 0.25, 2.0, 30.0, 12.0, 0.4, 1.1, 0.9]);
        for nb in neighbor_average(&g, &[v; 4]) {
            assert_eq!(nb.mean, v);
        }
    }

    #[test]
    fn names_match_vector_length() {
        let f = NetworkFeatures {
            degree: 1,
            weighted_degree: 1.0,
            pagerank: 0.5,
            neighbor_mean: KinematicFeatures::default(),
            isolated: false,
        };
        assert_eq!(NetworkFeatures::names().len(), f.to_vec().len());
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (2usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0], n * n)))
    }

    proptest! {
        #[test]
        fn permutation_equivariance((n, raw) in arb_graph(), seed in any::<u64>()) {
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..i {
                    w[i * n + j] = raw[i * n + j];
                    w[j * n + i] = raw[i * n + j];
                }
            }
            // Deterministic permutation from the seed.
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
            let mut pw = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    pw[perm[i] * n + perm[j]] = w[i * n + j];
                }
            }
            let mut pnames = names.clone();
            for i in 0..n {
                pnames[perm[i]] = names[i].clone();
            }
            let kin: Vec<KinematicFeatures> = (0..n).map(|i| KinematicFeatures::from_array([i as f64; 8])).collect();
            let mut pkin = kin.clone();
            for i in 0..n {
                pkin[perm[i]] = kin[i];
            }
            let cfg = ProximityConfig::default();
            let g = ProximityGraph::from_weights(names, w, cfg).unwrap();
            let pg = ProximityGraph::from_weights(pnames, pw, cfg).unwrap();
            let a = network_features(&g, &kin, &PageRankConfig::default()).unwrap();
            let b = network_features(&pg, &pkin, &PageRankConfig::default()).unwrap();
            for i in 0..n {
                let (x, y) = (a[i], b[perm[i]]);
                prop_assert_eq!(x.degree, y.degree);
                prop_assert_eq!(x.isolated, y.isolated);
                prop_assert!((x.weighted_degree - y.weighted_degree).abs() < 1e-12);
                prop_assert!((x.pagerank - y.pagerank).abs() < 1e-9);
                for (p, q) in x.neighbor_mean.to_array().iter().zip(y.neighbor_mean.to_array()) {
                    prop_assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }
}
