//! Inner-level learners: one linear classifier per representation space,
//! fitted to the encoder's soft labels with soft-target cross-entropy.

use ndarray::{Array2, ArrayView2, Ix2, Zip};

use crate::embedding::EmbeddingMatrix;
use crate::encoder::SoftLabeling;
use crate::error::{Error, Result};
use crate::linalg::{log_softmax_rows, softmax_rows};
use crate::optim::{gd_update, AdamConfig, AdamState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerOptimizer {
    Adam,
    /// Plain gradient descent, used by the theory checks.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig<T> {
    pub steps: usize,
    pub learning_rate: T,
    pub adam: AdamConfig<T>,
    pub warm_start: bool,
    pub optimizer: InnerOptimizer,
}

impl<T: Scalar> Default for InnerConfig<T> {
    fn default() -> Self {
        Self {
            steps: 10,
            learning_rate: T::lit(1e-3),
            adam: AdamConfig::default(),
            warm_start: true,
            optimizer: InnerOptimizer::Adam,
        }
    }
}

impl<T: Scalar> InnerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("inner steps must be at least 1".into()));
        }
        if !(self.learning_rate > T::zero()) {
            return Err(Error::InvalidConfig("inner learning rate must be positive".into()));
        }
        let valid_beta = |b: T| b >= T::zero() && b < T::one();
        if !valid_beta(self.adam.beta1) || !valid_beta(self.adam.beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Linear classifier `logits = x wᵀ` with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerClassifier<T> {
    pub weights: Array2<T>,
    pub state: AdamState<T, Ix2>,
}

impl<T: Scalar> InnerClassifier<T> {
    /// Cold-start state: zero weights and zero moments.
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        Self {
            weights: Array2::zeros((n_classes, dim)),
            state: AdamState::zeros(Ix2(n_classes, dim)),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.state.step_count
    }

    pub fn logits(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        x.dot(&self.weights.t())
    }

    /// Hard predictions, ties to the lowest class.
    pub fn predict(&self, x: ArrayView2<'_, T>) -> Vec<usize> {
        self.logits(x)
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (c, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

fn check_shapes<T: Scalar>(logits: &Array2<T>, target: &SoftLabeling<T>) -> Result<()> {
    if logits.dim() != target.probs.dim() {
        return Err(Error::ShapeMismatch {
            context: "soft cross-entropy",
            expected: target.probs.dim(),
            found: logits.dim(),
        });
    }
    Ok(())
}

/// Mean over rows of `−Σ_c target_c · log softmax(logits)_c`.
pub fn soft_cross_entropy<T: Scalar>(logits: &Array2<T>, target: &SoftLabeling<T>) -> Result<T> {
    check_shapes(logits, target)?;
    Ok(cross_entropy_with_log_probs(&log_softmax_rows(logits.view()), &target.probs))
}

pub(crate) fn cross_entropy_with_log_probs<T: Scalar>(log_probs: &Array2<T>, target: &Array2<T>) -> T {
    let n = T::from_count(log_probs.nrows());
    let mut total = T::zero();
    Zip::from(log_probs).and(target).for_each(|&lp, &t| {
        if t != T::zero() {
            total = total - t * lp;
        }
    });
    total / n
}

/// `∂ soft_cross_entropy / ∂ logits = (softmax(logits) − target) / N`.
pub fn soft_cross_entropy_grad_logits<T: Scalar>(logits: &Array2<T>, target: &SoftLabeling<T>) -> Result<Array2<T>> {
    check_shapes(logits, target)?;
    let n = T::from_count(logits.nrows());
    let mut g = softmax_rows(logits.view());
    g.zip_mut_with(&target.probs, |p, &t| *p = (*p - t) / n);
    Ok(g)
}

/// Gradient of the loss with respect to the classifier weights (`C × q`).
pub fn soft_cross_entropy_grad_weights<T: Scalar>(
    weights: &Array2<T>,
    x: ArrayView2<'_, T>,
    target: &SoftLabeling<T>,
) -> Result<Array2<T>> {
    let logits = x.dot(&weights.t());
    let dlogits = soft_cross_entropy_grad_logits(&logits, target)?;
    Ok(dlogits.t().dot(&x))
}

/// One optimizer update on the soft cross-entropy.
pub fn inner_step<T: Scalar>(
    clf: &InnerClassifier<T>,
    view: &EmbeddingMatrix<T>,
    target: &SoftLabeling<T>,
    cfg: &InnerConfig<T>,
) -> Result<InnerClassifier<T>> {
    let mut next = clf.clone();
    step_in_place(&mut next, view.data(), target, cfg)?;
    Ok(next)
}

pub(crate) fn step_in_place<T: Scalar>(
    clf: &mut InnerClassifier<T>,
    x: ArrayView2<'_, T>,
    target: &SoftLabeling<T>,
    cfg: &InnerConfig<T>,
) -> Result<()> {
    if x.ncols() != clf.weights.ncols() {
        return Err(Error::ShapeMismatch {
            context: "inner step features",
            expected: (x.nrows(), clf.weights.ncols()),
            found: x.dim(),
        });
    }
    let grad = soft_cross_entropy_grad_weights(&clf.weights, x, target)?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            context: "inner classifier".into(),
        });
    }
    match cfg.optimizer {
        InnerOptimizer::Adam => {
            clf.state
                .update(&mut clf.weights, &grad, cfg.learning_rate, &cfg.adam)
        }
        InnerOptimizer::GradientDescent => {
            gd_update(&mut clf.weights, &grad, cfg.learning_rate);
            clf.state.step_count += 1;
        }
    }
    if clf.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteGradient {
            context: "inner classifier weights".into(),
        });
    }
    Ok(())
}

/// Applies [`inner_step`] exactly `cfg.steps` times.
pub fn fit_inner<T: Scalar>(
    clf0: &InnerClassifier<T>,
    view: &EmbeddingMatrix<T>,
    target: &SoftLabeling<T>,
    cfg: &InnerConfig<T>,
) -> Result<InnerClassifier<T>> {
    cfg.validate()?;
    let mut clf = clf0.clone();
    fit_in_place(&mut clf, view.data(), target, cfg)?;
    Ok(clf)
}

pub(crate) fn fit_in_place<T: Scalar>(
    clf: &mut InnerClassifier<T>,
    x: ArrayView2<'_, T>,
    target: &SoftLabeling<T>,
    cfg: &InnerConfig<T>,
) -> Result<()> {
    for _ in 0..cfg.steps {
        step_in_place(clf, x, target, cfg)?;
    }
    Ok(())
}
