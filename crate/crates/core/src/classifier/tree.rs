use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

const LEAF: i32 = -1;
/// Splits must reduce squared error by more than this.
const MIN_GAIN: f64 = 1e-10;
/// Below this many (row, feature) cells the split search stays sequential.
const PARALLEL_CELLS: usize = 32_768;

/// Regression tree stored as parallel node arrays.
///
/// `feature[i] == -1` marks a leaf; otherwise rows with
/// `x[feature] <= threshold` go to `left[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
    /// Squared-error reduction of each split, 0 on leaves.
    pub gain: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
}

struct Split {
    feature: usize,
    /// Last position (in the feature's sorted list) that goes left.
    pos: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    fn push_leaf(&mut self, value: f64) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.gain.push(0.0);
        self.feature.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    /// Evaluates the tree on a row laid out in the model's feature order.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let f = self.feature[i];
            if f == LEAF {
                return self.value[i];
            }
            i = if row[f as usize] <= self.threshold[i] {
                self.left[i] as usize
            } else {
                self.right[i] as usize
            };
        }
    }

    /// Iterator over `(feature, gain)` of internal nodes.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.feature
            .iter()
            .zip(&self.gain)
            .filter(|(f, _)| **f != LEAF)
            .map(|(f, g)| (*f as usize, *g))
    }

    /// Checks the arrays describe a well-formed tree over `n_features` columns.
    pub(crate) fn is_well_formed(&self, n_features: usize) -> bool {
        let n = self.feature.len();
        n > 0
            && [self.threshold.len(), self.left.len(), self.right.len(), self.value.len(), self.gain.len()]
                .iter()
                .all(|&l| l == n)
            && (0..n).all(|i| {
                let f = self.feature[i];
                f == LEAF
                    || (f >= 0
                        && (f as usize) < n_features
                        && (self.left[i] as usize) > i
                        && (self.left[i] as usize) < n
                        && (self.right[i] as usize) > i
                        && (self.right[i] as usize) < n)
            })
    }
}

/// Greedy exact split search on presorted columns.
pub(crate) struct TreeBuilder<'a> {
    matrix: &'a FeatureMatrix,
    residual: &'a [f64],
    hessian: &'a [f64],
    params: TreeParams,
    go_left: Vec<bool>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(matrix: &'a FeatureMatrix, residual: &'a [f64], hessian: &'a [f64], params: TreeParams) -> Self {
        TreeBuilder {
            matrix,
            residual,
            hessian,
            params,
            go_left: vec![false; matrix.n_rows()],
        }
    }

    /// `sorted[j]` lists the rows to fit, ordered by feature `j`.
    pub fn fit(mut self, sorted: Vec<Vec<usize>>) -> RegressionTree {
        let mut tree = RegressionTree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            value: Vec::new(),
            gain: Vec::new(),
        };
        if sorted.is_empty() {
            // No features: a single leaf over whatever rows exist.
            let rows: Vec<usize> = (0..self.matrix.n_rows()).collect();
            let v = self.leaf_value(&rows);
            tree.push_leaf(v);
            return tree;
        }
        let mut rows = sorted[0].clone();
        rows.sort_unstable();
        self.grow(&mut tree, rows, sorted, 0);
        tree
    }

    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&r| self.residual[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.hessian[r]).sum();
        g / (h + self.params.l2)
    }

    /// `rows` holds the node's rows in ascending index order, so node sums do
    /// not depend on which columns are present.
    fn grow(&mut self, tree: &mut RegressionTree, rows: Vec<usize>, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let node = tree.push_leaf(self.leaf_value(&rows));
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_samples_leaf.max(1) {
            return node;
        }
        let total: f64 = rows.iter().map(|&r| self.residual[r]).sum();
        let Some(split) = self.best_split(&sorted, total) else {
            return node;
        };

        for (k, &r) in sorted[split.feature].iter().enumerate() {
            self.go_left[r] = k <= split.pos;
        }
        let (left, right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .iter()
            .map(|list| list.iter().partition::<Vec<usize>, _>(|&&r| self.go_left[r]))
            .unzip();
        let (rows_l, rows_r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| self.go_left[r]);
        drop(sorted);

        let l = self.grow(tree, rows_l, left, depth + 1);
        let r = self.grow(tree, rows_r, right, depth + 1);
        tree.feature[node] = split.feature as i32;
        tree.threshold[node] = split.threshold;
        tree.left[node] = l as u32;
        tree.right[node] = r as u32;
        tree.value[node] = 0.0;
        tree.gain[node] = split.gain;
        node
    }

    fn best_split(&self, sorted: &[Vec<usize>], total: f64) -> Option<Split> {
        let n = sorted[0].len();
        let candidates: Vec<Option<Split>> = if n * sorted.len() >= PARALLEL_CELLS {
            sorted
                .par_iter()
                .enumerate()
                .map(|(j, list)| self.best_split_on(j, list, total))
                .collect()
        } else {
            sorted
                .iter()
                .enumerate()
                .map(|(j, list)| self.best_split_on(j, list, total))
                .collect()
        };
        // Column order breaks gain ties, independent of scheduling.
        candidates.into_iter().flatten().fold(None, |best: Option<Split>, s| match best {
            Some(b) if b.gain >= s.gain => Some(b),
            _ => Some(s),
        })
    }

    fn best_split_on(&self, feature: usize, list: &[usize], total: f64) -> Option<Split> {
        let n = list.len();
        let msl = self.params.min_samples_leaf.max(1);
        let parent = total * total / n as f64;
        let mut best: Option<Split> = None;
        let mut left_sum = 0.0;
        for pos in 0..n - 1 {
            let r = list[pos];
            left_sum += self.residual[r];
            let nl = pos + 1;
            let nr = n - nl;
            if nl < msl {
                continue;
            }
            if nr < msl {
                break;
            }
            let (a, b) = (self.matrix.value(r, feature), self.matrix.value(list[pos + 1], feature));
            if a == b {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent;
            if gain > MIN_GAIN && best.as_ref().map_or(true, |s| gain > s.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid >= a && mid < b { mid } else { a };
                best = Some(Split {
                    feature,
                    pos,
                    threshold,
                    gain,
                });
            }
        }
        best
    }
}

/// Row indices sorted by each column, ties by row index.
pub(crate) fn presort(matrix: &FeatureMatrix) -> Vec<Vec<usize>> {
    (0..matrix.n_cols())
        .map(|j| {
            let mut idx: Vec<usize> = (0..matrix.n_rows()).collect();
            idx.sort_by(|&a, &b| matrix.value(a, j).total_cmp(&matrix.value(b, j)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = cols[0].len();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new((0..cols.len()).map(|j| format!("f{j}")).collect(), rows, vec![], vec![0; n]).unwrap()
    }

    fn params() -> TreeParams {
        TreeParams { max_depth: 3, min_samples_leaf: 1, l2: 0.0 }
    }

    #[test]
    fn fits_a_step_function() {
        let m = matrix(vec![vec![1.0, 2.0, 3.0, 10.0, 11.0, 12.0]]);
        let r = [-1.0, -1.0, -1.0, 2.0, 2.0, 2.0];
        let h = [1.0; 6];
        let tree = TreeBuilder::new(&m, &r, &h, params()).fit(presort(&m));
        assert_eq!(tree.node_count(), 3);
        assert_eq!(tree.threshold[0], 6.5);
        assert_eq!(tree.predict(&[0.0]), -1.0);
        assert_eq!(tree.predict(&[100.0]), 2.0);
        assert!(tree.is_well_formed(1));
    }

    #[test]
    fn constant_residual_does_not_split() {
        let m = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let tree = TreeBuilder::new(&m, &[0.5; 4], &[0.25; 4], params()).fit(presort(&m));
        assert_eq!(tree.node_count(), 1);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let m = matrix(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]]);
        let r = [5.0, 0.0, 0.0, 0.0, 0.0];
        let p = TreeParams { min_samples_leaf: 2, ..params() };
        let tree = TreeBuilder::new(&m, &r, &[1.0; 5], p).fit(presort(&m));
        for i in 0..tree.node_count() {
            if tree.feature[i] != LEAF {
                assert!(tree.threshold[i] >= 2.0);
            }
        }
    }

    #[test]
    fn equal_values_are_never_separated() {
        let m = matrix(vec![vec![1.0, 1.0, 1.0, 2.0]]);
        let r = [1.0, -1.0, 1.0, -1.0];
        let tree = TreeBuilder::new(&m, &r, &[1.0; 4], params()).fit(presort(&m));
        assert_eq!(tree.node_count(), 3);
        assert_eq!(tree.threshold[0], 1.5);
    }

    #[test]
    fn adjacent_floats_keep_threshold_between() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = matrix(vec![vec![a, b]]);
        let tree = TreeBuilder::new(&m, &[1.0, -1.0], &[1.0; 2], params()).fit(presort(&m));
        assert_eq!(tree.predict(&[a]), 1.0);
        assert_eq!(tree.predict(&[b]), -1.0);
    }
}
