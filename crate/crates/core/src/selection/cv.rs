use crate::embedding::{MultiViewDataset, SplitSpec};
use crate::encoder::{distinct_classes, SoftLabeling};
use crate::error::{Error, Result};
use crate::inner::{fit_in_place, InnerClassifier, InnerConfig, InnerOptimizer};
use crate::scalar::Scalar;

/// Fixed training budget for the held-out classifiers so scores stay
/// comparable across runs.
pub fn cv_budget<T: Scalar>() -> InnerConfig<T> {
    InnerConfig {
        steps: 300,
        learning_rate: T::lit(1e-2),
        warm_start: false,
        optimizer: InnerOptimizer::Adam,
        ..InnerConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Mean of `fold_scores`.
    pub score: f64,
    /// Held-out accuracy per evaluated fold, averaged over spaces.
    pub fold_scores: Vec<f64>,
    /// Held-out accuracy per space, averaged over evaluated folds.
    pub space_scores: Vec<f64>,
    /// Folds whose held-out part contains a class absent from training.
    pub skipped_folds: Vec<usize>,
    /// The pseudo-labeling uses fewer than `C` classes.
    pub degenerate: bool,
}

/// Scores a hard labeling by how well fresh linear classifiers trained on
/// it generalize to held-out folds, separately in every space.
pub fn cross_validate_task<T: Scalar>(
    d: &MultiViewDataset<T>,
    pseudo: &[usize],
    folds: &SplitSpec,
    budget: &InnerConfig<T>,
) -> Result<CvReport> {
    let n = d.n_samples();
    if pseudo.len() != n || folds.assignment.len() != n {
        return Err(Error::LengthMismatch {
            left: pseudo.len().max(folds.assignment.len()),
            right: n,
        });
    }
    let c = d.n_classes();
    if let Some(&label) = pseudo.iter().find(|&&l| l >= c) {
        return Err(Error::LabelOutOfRange { label, n_classes: c });
    }
    budget.validate()?;

    let mut fold_scores = Vec::new();
    let mut per_space_sum = vec![0.0; d.n_views()];
    let mut skipped_folds = Vec::new();
    for fold in 0..folds.fold_count {
        let test = folds.fold_indices(fold);
        let train = folds.complement_indices(fold);
        if test.is_empty() {
            continue;
        }
        let mut present = vec![false; c];
        for &i in &train {
            present[pseudo[i]] = true;
        }
        if test.iter().any(|&i| !present[pseudo[i]]) {
            log::warn!("fold {fold}: held-out class missing from training folds, skipped");
            skipped_folds.push(fold);
            continue;
        }
        let train_labels: Vec<usize> = train.iter().map(|&i| pseudo[i]).collect();
        let target = SoftLabeling::one_hot(&train_labels, c);
        let mut fold_total = 0.0;
        for (k, view) in d.views().iter().enumerate() {
            let x_train = view.select_rows(&train);
            let x_test = view.select_rows(&test);
            let mut clf = InnerClassifier::zeros(c, view.dim());
            fit_in_place(&mut clf, x_train.data(), &target, budget)?;
            let predicted = clf.predict(x_test.data());
            let correct = predicted
                .iter()
                .zip(&test)
                .filter(|(p, &i)| **p == pseudo[i])
                .count();
            let acc = correct as f64 / test.len() as f64;
            per_space_sum[k] += acc;
            fold_total += acc;
        }
        fold_scores.push(fold_total / d.n_views() as f64);
    }
    if fold_scores.is_empty() {
        return Err(Error::NoValidFolds);
    }
    let evaluated = fold_scores.len() as f64;
    Ok(CvReport {
        score: fold_scores.iter().sum::<f64>() / evaluated,
        space_scores: per_space_sum.iter().map(|s| s / evaluated).collect(),
        fold_scores,
        skipped_folds,
        degenerate: distinct_classes(pseudo) < c,
    })
}

/// What selection needs to know about one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// `None` when the run failed or could not be scored.
    pub cv_score: Option<f64>,
    pub degenerate: bool,
}

/// Highest-scoring non-degenerate run; ties go to the lowest index.
pub fn select_best(candidates: &[Candidate]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.degenerate {
            continue;
        }
        if let Some(score) = c.cv_score {
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
    }
    best.map(|(i, _)| i).ok_or(Error::AllRunsDegenerate)
}
