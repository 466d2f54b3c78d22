use rand::seq::SliceRandom;

use super::Split;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Assignment of every sample to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub fold_count: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl SplitSpec {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }

    pub fn complement_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f != fold).then_some(i))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles sample indices with the seeded generator and deals them into
/// folds round-robin, so fold sizes differ by at most one.
pub fn make_folds(n_samples: usize, fold_count: usize, seed: u64) -> Result<SplitSpec> {
    if fold_count < 2 {
        return Err(Error::InvalidConfig(format!(
            "fold_count must be at least 2, got {fold_count}"
        )));
    }
    if n_samples < fold_count {
        return Err(Error::TooFewSamples {
            n_samples,
            required: fold_count,
        });
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut seeded(seed));
    let mut assignment = vec![0; n_samples];
    for (pos, &sample) in order.iter().enumerate() {
        assignment[sample] = pos % fold_count;
    }
    Ok(SplitSpec {
        fold_count,
        seed,
        assignment,
    })
}

/// Seeded train/test split with `round(n * test_fraction)` test samples,
/// at least one of each.
pub fn random_split(n_samples: usize, test_fraction: f64, seed: u64) -> Result<Vec<Split>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples { n_samples, required: 2 });
    }
    let n_test = ((n_samples as f64 * test_fraction).round() as usize).clamp(1, n_samples - 1);
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut seeded(seed));
    let mut split = vec![Split::Train; n_samples];
    for &i in &order[..n_test] {
        split[i] = Split::Test;
    }
    Ok(split)
}
