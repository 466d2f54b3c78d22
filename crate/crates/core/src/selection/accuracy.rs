use std::fmt::Write as _;
use std::path::Path;

use super::hungarian::hungarian_match;
use crate::error::{Error, Result};

/// Clustering accuracy after optimal relabeling.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub accuracy: f64,
    /// `permutation[predicted] = truth`.
    pub permutation: Vec<usize>,
    /// `contingency[predicted][truth]` counts.
    pub contingency: Vec<Vec<u64>>,
    pub matched: u64,
    pub n_samples: usize,
}

impl AccuracyReport {
    pub fn contingency_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.contingency {
            let fields: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn write_contingency_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.contingency_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn contingency(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut table = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        for label in [p, t] {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
        }
        table[p][t] += 1;
    }
    Ok(table)
}

pub fn clustering_accuracy(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<AccuracyReport> {
    let table = contingency(pred, truth, n_classes)?;
    let (permutation, matched) = hungarian_match(&table);
    let n = pred.len();
    Ok(AccuracyReport {
        accuracy: if n == 0 { 0.0 } else { matched as f64 / n as f64 },
        permutation,
        contingency: table,
        matched,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_relabeled_predictions_are_perfect() {
        let truth = vec![0, 1, 2, 2, 1, 0, 0];
        assert_eq!(clustering_accuracy(&truth, &truth, 3).unwrap().accuracy, 1.0);
        let relabeled: Vec<usize> = truth.iter().map(|&t| [2, 0, 1][t]).collect();
        let r = clustering_accuracy(&relabeled, &truth, 3).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.permutation, vec![1, 2, 0]);
    }

    #[test]
    fn ten_sample_example() {
        // contingency [[3,1],[2,4]]
        let pred = vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let truth = vec![0, 0, 0, 1, 0, 0, 1, 1, 1, 1];
        let r = clustering_accuracy(&pred, &truth, 2).unwrap();
        assert_eq!(r.contingency, vec![vec![3, 1], vec![2, 4]]);
        assert!((r.accuracy - 0.7).abs() < 1e-12);
        assert_eq!(r.contingency_csv(), "3,1\n2,4\n");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            clustering_accuracy(&[0, 1], &[0], 2),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            clustering_accuracy(&[0, 3], &[0, 1], 2),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }
}
