//! Fold splitting and the per-panel training schedule.
//!
//! Within a repetition, panel `p` evaluates the target on the cyclic window
//! `{p, ..., p + eval_fold - 1} mod K`. Every nuisance instance trains on a
//! contiguous cyclic window that starts right after the evaluation window:
//!
//! * `overlap`: all instances start at `p + eval_fold` and may share folds.
//! * `disjoint`: graph nodes are packed back to back, deps first.
//! * `independence`: the graph is first tree-expanded (a node reused along
//!   several paths is duplicated once per path), then packed like `disjoint`.
//!
//! Panel `p` is panel 0 rotated by `p`, which is what makes fitted models
//! reusable across panels.

mod allocate;
mod instances;
mod window;

pub use allocate::{allocate, min_folds_required, schedule, Allocation, AllocationError, PanelAllocation, Schedule};
pub(crate) use allocate::required_folds;
pub use instances::{instance_set, tree_expand, InstanceDep, InstanceSet, NuisanceInstance};
pub use window::{panel_eval_window, Window};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("cannot split {n} rows into {k} folds")]
    TooFewRows { n: usize, k: usize },
    #[error("fold label {label} at row {row} is out of range for K = {k}")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("fold {0} has no rows")]
    EmptyFold(usize),
}

/// Partition of rows into `K` non-empty folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, FoldError> {
        if labels.len() < k || k == 0 {
            return Err(FoldError::TooFewRows { n: labels.len(), k });
        }
        let mut seen = vec![false; k];
        for (row, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(FoldError::LabelOutOfRange { row, label, k });
            }
            seen[label] = true;
        }
        if let Some(f) = seen.iter().position(|s| !s) {
            return Err(FoldError::EmptyFold(f));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Rows whose fold lies in `window`, ascending.
    pub fn rows_in(&self, window: &Window) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| window.contains(l))
            .map(|(i, _)| i)
            .collect()
    }

    /// Hex SHA-256 over `K` and the label vector.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.k as u64).to_le_bytes());
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Derives the seed for stream `index` from `base` (splitmix64 finalizer
/// over `base ^ (index + 1) * 0x9E3779B97F4A7C15`). Each index gets its own
/// stream, so adding repetitions never changes earlier ones.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded permutation of the rows dealt round-robin into `k` folds.
pub fn default_fold_split(n: usize, k: usize, seed: u64, rep_index: usize) -> Result<FoldAssignment, FoldError> {
    if n < k || k == 0 {
        return Err(FoldError::TooFewRows { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, rep_index as u64));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut labels = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        labels[row] = pos % k;
    }
    FoldAssignment::new(labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_and_uneven_sizes() {
        assert_eq!(default_fold_split(10, 5, 1, 0).unwrap().sizes(), vec![2; 5]);
        let mut s = default_fold_split(7, 3, 1, 0).unwrap().sizes();
        s.sort();
        assert_eq!(s, vec![2, 2, 3]);
    }

    #[test]
    fn deterministic_and_rep_sensitive() {
        let a = default_fold_split(50, 5, 9, 3).unwrap();
        assert_eq!(a, default_fold_split(50, 5, 9, 3).unwrap());
        assert_ne!(a, default_fold_split(50, 5, 9, 4).unwrap());
        assert_ne!(a.digest(), default_fold_split(50, 5, 10, 3).unwrap().digest());
    }

    #[test]
    fn too_few_rows() {
        assert_eq!(default_fold_split(3, 5, 0, 0), Err(FoldError::TooFewRows { n: 3, k: 5 }));
    }

    #[test]
    fn assignment_validation() {
        assert_eq!(FoldAssignment::new(vec![0, 0, 1], 3), Err(FoldError::EmptyFold(2)));
        assert!(matches!(
            FoldAssignment::new(vec![0, 3, 1], 3),
            Err(FoldError::LabelOutOfRange { row: 1, .. })
        ));
        let f = FoldAssignment::new(vec![0, 1, 2, 0, 1], 3).unwrap();
        assert_eq!(f.rows_in(&Window::new(2, 2, 3)), vec![0, 2, 3]);
    }

    proptest! {
        #[test]
        fn default_split_is_near_equal_partition(n in 2usize..200, k in 2usize..12, seed in any::<u64>(), rep in 0usize..5) {
            prop_assume!(n >= k);
            let f = default_fold_split(n, k, seed, rep).unwrap();
            prop_assert_eq!(f.n_rows(), n);
            let sizes = f.sizes();
            let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
            prop_assert!(lo >= 1 && hi - lo <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }
}
