use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldStrategy {
    /// Consecutive runs of windows, in window order.
    #[default]
    ContiguousBlocks,
    /// Windows shuffled within each class, then dealt round-robin.
    StratifiedRandom,
}

/// Splits rows into `k` folds without ever separating rows that share a
/// group key. Each fold lists row indices in ascending order.
///
/// `targets` is only consulted by [`FoldStrategy::StratifiedRandom`] and may
/// be empty.
pub fn kfold_split(
    group_keys: &[usize],
    targets: &[String],
    k: usize,
    strategy: FoldStrategy,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    let groups: Vec<usize> = group_keys.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if groups.len() < k {
        return Err(Error::TooFewGroups {
            groups: groups.len(),
            k,
        });
    }

    let ordered: Vec<usize> = match strategy {
        FoldStrategy::ContiguousBlocks => groups.clone(),
        FoldStrategy::StratifiedRandom => stratified_order(group_keys, targets, &groups, seed),
    };
    let g = ordered.len();
    let fold_of: BTreeMap<usize, usize> = ordered
        .iter()
        .enumerate()
        .map(|(pos, &key)| {
            let fold = match strategy {
                // Fold i takes positions [i*g/k, (i+1)*g/k).
                FoldStrategy::ContiguousBlocks => (pos * k + k - 1) / g,
                FoldStrategy::StratifiedRandom => pos % k,
            };
            (key, fold.min(k - 1))
        })
        .collect();
    let mut folds = vec![Vec::new(); k];
    for (row, key) in group_keys.iter().enumerate() {
        folds[fold_of[key]].push(row);
    }
    Ok(folds)
}

fn stratified_order(group_keys: &[usize], targets: &[String], groups: &[usize], seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    if targets.len() == group_keys.len() {
        let mut votes: BTreeMap<usize, Vec<(&str, usize)>> = BTreeMap::new();
        for (key, t) in group_keys.iter().zip(targets) {
            let tally = votes.entry(*key).or_default();
            match tally.iter_mut().find(|(l, _)| *l == t.as_str()) {
                Some(e) => e.1 += 1,
                None => tally.push((t, 1)),
            }
        }
        for (key, tally) in votes {
            let label = tally
                .iter()
                .fold(tally[0], |b, &e| if e.1 > b.1 { e } else { b })
                .0;
            by_class.entry(label).or_default().push(key);
        }
    } else {
        by_class.insert("", groups.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ordered = Vec::with_capacity(groups.len());
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        ordered.extend_from_slice(members);
    }
    ordered
}
