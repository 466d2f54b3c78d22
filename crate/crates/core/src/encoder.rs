//! The labeling hypothesis: an average of `K` weight-normalized linear
//! softmax heads, one per representation space.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::embedding::{EmbeddingMatrix, MultiViewDataset};
use crate::error::{Error, Result};
use crate::linalg::softmax_rows;
use crate::scalar::Scalar;

/// One weight-normalized linear head `row_c = gain_c · direction_c / ‖direction_c‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskHead<T> {
    pub direction: Array2<T>,
    pub gain: Array1<T>,
    pub space_index: usize,
}

impl<T: Scalar> TaskHead<T> {
    /// Gaussian directions with standard deviation `dim^{-1/2}`, unit gains.
    pub fn random<R: Rng + ?Sized>(n_classes: usize, dim: usize, space_index: usize, rng: &mut R) -> Self {
        let std = 1.0 / (dim as f64).sqrt();
        let direction = Array2::from_shape_simple_fn((n_classes, dim), || {
            let z: f64 = rng.sample(StandardNormal);
            T::lit(z * std)
        });
        Self {
            direction,
            gain: Array1::ones(n_classes),
            space_index,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.direction.nrows()
    }

    pub fn dim(&self) -> usize {
        self.direction.ncols()
    }

    pub fn direction_norms(&self) -> Array1<T> {
        self.direction.map_axis(Axis(1), |r| r.dot(&r).sqrt())
    }

    /// The `C × q` matrix actually applied to embeddings.
    pub fn effective_weight(&self) -> Array2<T> {
        let norms = self.direction_norms();
        let mut w = self.direction.clone();
        Zip::from(w.rows_mut())
            .and(&self.gain)
            .and(&norms)
            .for_each(|mut row, &g, &n| row.mapv_inplace(|v| g * v / n));
        w
    }

    pub fn logits(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        x.dot(&self.effective_weight().t())
    }
}

/// The ensemble `τ_θ(x) = K⁻¹ Σ_k softmax(θ_kᵀ φ_k(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEncoder<T> {
    pub heads: Vec<TaskHead<T>>,
    pub n_classes: usize,
}

impl<T: Scalar> TaskEncoder<T> {
    pub fn new(heads: Vec<TaskHead<T>>, n_classes: usize) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::InvalidConfig("task encoder needs at least one head".into()));
        }
        for (k, h) in heads.iter().enumerate() {
            if h.space_index != k {
                return Err(Error::InvalidConfig(format!(
                    "head {k} carries space index {}",
                    h.space_index
                )));
            }
            if h.n_classes() != n_classes || h.gain.len() != n_classes {
                return Err(Error::InvalidConfig(format!(
                    "head {k} has {} classes, encoder has {n_classes}",
                    h.n_classes()
                )));
            }
            if h.direction_norms().iter().any(|&n| n == T::zero()) {
                return Err(Error::InvalidConfig(format!("head {k} has a zero direction row")));
            }
        }
        Ok(Self { heads, n_classes })
    }

    pub fn random<R: Rng + ?Sized>(dims: &[usize], n_classes: usize, rng: &mut R) -> Self {
        let heads = dims
            .iter()
            .enumerate()
            .map(|(k, &q)| TaskHead::random(n_classes, q, k, rng))
            .collect();
        Self { heads, n_classes }
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    fn check_views(&self, views: &[EmbeddingMatrix<T>]) -> Result<()> {
        if views.len() != self.heads.len() {
            return Err(Error::ViewCountMismatch {
                expected: self.heads.len(),
                found: views.len(),
            });
        }
        Ok(())
    }
}

/// `N × C` matrix of row-stochastic class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabeling<T> {
    pub probs: Array2<T>,
}

impl<T: Scalar> SoftLabeling<T> {
    pub fn n_samples(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.probs.ncols()
    }

    /// One-hot encoding of hard labels.
    pub fn one_hot(labels: &[usize], n_classes: usize) -> Self {
        let mut probs = Array2::zeros((labels.len(), n_classes));
        for (i, &l) in labels.iter().enumerate() {
            probs[[i, l]] = T::one();
        }
        Self { probs }
    }

    pub fn to_matrix(&self, name: &str) -> Result<EmbeddingMatrix<T>> {
        EmbeddingMatrix::new(name, self.probs.clone())
    }
}

pub fn forward_head<T: Scalar>(head: &TaskHead<T>, view: &EmbeddingMatrix<T>) -> Result<SoftLabeling<T>> {
    if view.dim() != head.dim() {
        return Err(Error::DimensionMismatch {
            location: format!("view '{}' vs head {}", view.name(), head.space_index),
            expected: head.dim(),
            found: view.dim(),
        });
    }
    Ok(SoftLabeling {
        probs: softmax_rows(head.logits(view.data()).view()),
    })
}

/// Per-head outputs, in head order.
pub fn forward_heads<T: Scalar>(enc: &TaskEncoder<T>, views: &[EmbeddingMatrix<T>]) -> Result<Vec<SoftLabeling<T>>> {
    enc.check_views(views)?;
    enc.heads
        .iter()
        .zip(views)
        .map(|(h, v)| forward_head(h, v))
        .collect()
}

/// Mean of per-head outputs, accumulated in head order.
pub fn average_heads<T: Scalar>(per_head: &[SoftLabeling<T>]) -> SoftLabeling<T> {
    let mut acc = per_head[0].probs.clone();
    for s in &per_head[1..] {
        acc.zip_mut_with(&s.probs, |a, &b| *a = *a + b);
    }
    acc.mapv_inplace(|v| v / T::from_count(per_head.len()));
    SoftLabeling { probs: acc }
}

pub fn forward_views<T: Scalar>(enc: &TaskEncoder<T>, views: &[EmbeddingMatrix<T>]) -> Result<SoftLabeling<T>> {
    Ok(average_heads(&forward_heads(enc, views)?))
}

pub fn forward_ensemble<T: Scalar>(enc: &TaskEncoder<T>, d: &MultiViewDataset<T>) -> Result<SoftLabeling<T>> {
    forward_views(enc, d.views())
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn hard_assign<T: Scalar>(s: &SoftLabeling<T>) -> Vec<usize> {
    s.probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Number of distinct classes used by a hard labeling.
pub fn distinct_classes(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Mean of the rows.
pub fn label_distribution<T: Scalar>(s: &SoftLabeling<T>) -> Array1<T> {
    s.probs
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(s.n_classes()))
}

/// Shannon entropy in nats with `0 · ln 0 = 0`.
pub fn entropy<T: Scalar>(p: &Array1<T>) -> T {
    p.iter()
        .filter(|&&v| v > T::zero())
        .map(|&v| -v * v.ln())
        .sum()
}

/// `Σ_k H(τ̄_k)` over the heads' mean outputs.
pub fn entropy_regularizer<T: Scalar>(enc: &TaskEncoder<T>, d: &MultiViewDataset<T>) -> Result<T> {
    let per_head = forward_heads(enc, d.views())?;
    Ok(per_head
        .iter()
        .map(|s| entropy(&label_distribution(s)))
        .sum())
}

/// Gradient of one head's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient<T> {
    pub direction: Array2<T>,
    pub gain: Array1<T>,
}

/// Pulls a gradient with respect to a head's softmax outputs back to its
/// weight-normalized parameters.
///
/// `probs` are the head's outputs on `x`, `upstream` is `∂J/∂probs`.
pub fn backprop_head<T: Scalar>(
    head: &TaskHead<T>,
    x: ArrayView2<'_, T>,
    probs: &Array2<T>,
    upstream: &Array2<T>,
) -> HeadGradient<T> {
    // softmax Jacobian: dz = p ⊙ (g − ⟨p, g⟩)
    let mut dlogits = upstream.clone();
    Zip::from(dlogits.rows_mut())
        .and(probs.rows())
        .for_each(|mut g, p| {
            let inner = g.dot(&p);
            Zip::from(&mut g).and(&p).for_each(|gv, &pv| *gv = pv * (*gv - inner));
        });
    let dweight = dlogits.t().dot(&x);
    weight_norm_backward(head, &dweight)
}

/// Chain rule through `w_c = g_c v_c / ‖v_c‖`.
pub fn weight_norm_backward<T: Scalar>(head: &TaskHead<T>, dweight: &Array2<T>) -> HeadGradient<T> {
    let norms = head.direction_norms();
    let mut direction = Array2::zeros(head.direction.raw_dim());
    let mut gain = Array1::zeros(head.gain.len());
    for c in 0..head.n_classes() {
        let v = head.direction.row(c);
        let n = norms[c];
        let dw = dweight.row(c);
        let proj = dw.dot(&v) / n;
        gain[c] = proj;
        let scale = head.gain[c] / n;
        let mut out = direction.row_mut(c);
        Zip::from(&mut out)
            .and(&dw)
            .and(&v)
            .for_each(|o, &dwi, &vi| *o = scale * (dwi - proj * vi / n));
    }
    HeadGradient { direction, gain }
}

/// `∂R/∂probs` for one head: `−(ln τ̄_c + 1) / N` broadcast over rows.
pub fn entropy_grad_wrt_probs<T: Scalar>(probs: &Array2<T>) -> Array2<T> {
    let n = T::from_count(probs.nrows());
    let mean = probs.mean_axis(Axis(0)).expect("non-empty");
    let row = mean.mapv(|m| -(m.max(T::tiny()).ln() + T::one()) / n);
    let mut out = Array2::zeros(probs.raw_dim());
    for mut r in out.rows_mut() {
        r.assign(&row);
    }
    out
}

/// Analytic gradient of `R(θ)` with respect to every head's parameters.
pub fn entropy_regularizer_grad<T: Scalar>(
    enc: &TaskEncoder<T>,
    views: &[EmbeddingMatrix<T>],
) -> Result<Vec<HeadGradient<T>>> {
    let per_head = forward_heads(enc, views)?;
    Ok(enc
        .heads
        .iter()
        .zip(views)
        .zip(&per_head)
        .map(|((h, v), s)| backprop_head(h, v.data(), &s.probs, &entropy_grad_wrt_probs(&s.probs)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn view(data: Array2<f64>) -> EmbeddingMatrix<f64> {
        EmbeddingMatrix::new("v", data).unwrap()
    }

    fn head(direction: Array2<f64>, gain: Array1<f64>, k: usize) -> TaskHead<f64> {
        TaskHead {
            direction,
            gain,
            space_index: k,
        }
    }

    #[test]
    fn zero_gain_gives_uniform_rows() {
        let h = head(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], Array1::zeros(3), 0);
        let s = forward_head(&h, &view(array![[5.0, -2.0], [0.3, 9.0]])).unwrap();
        assert_abs_diff_eq!(s.probs, Array2::from_elem((2, 3), 1.0 / 3.0), epsilon = 1e-15);
    }

    #[test]
    fn log_three_logit_gives_three_quarters() {
        let h = head(array![[1.0], [1.0]], array![3.0f64.ln(), 0.0], 0);
        let s = forward_head(&h, &view(array![[1.0]])).unwrap();
        assert_abs_diff_eq!(s.probs, array![[0.75, 0.25]], epsilon = 1e-12);
    }

    #[test]
    fn constant_logit_shift_is_invisible() {
        let base = head(array![[1.0, 0.0], [0.0, 1.0]], array![2.0, 0.5], 0);
        let x = view(array![[0.2, 0.7]]);
        let p0 = softmax_rows(base.logits(x.data()).view());
        let shifted = softmax_rows((base.logits(x.data()) + 100.0).view());
        assert_abs_diff_eq!(p0, shifted, epsilon = 1e-9);
    }

    #[test]
    fn dimension_and_view_count_checks() {
        let h = head(array![[1.0, 0.0]], array![1.0], 0);
        assert!(matches!(
            forward_head(&h, &view(array![[1.0]])),
            Err(Error::DimensionMismatch { .. })
        ));
        let enc = TaskEncoder::new(vec![h], 1).unwrap();
        let d = MultiViewDataset::new(vec![view(array![[1.0, 0.0]]), view(array![[1.0, 0.0]])], 1).unwrap();
        assert!(matches!(
            forward_ensemble(&enc, &d),
            Err(Error::ViewCountMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn ensemble_is_head_mean() {
        let x = view(array![[1.0]]);
        let big = 60.0;
        let a = head(array![[1.0], [1.0]], array![big, 0.0], 0);
        let b = head(array![[1.0], [1.0]], array![0.0, big], 1);
        let enc = TaskEncoder::new(vec![a.clone(), b], 2).unwrap();
        let d = MultiViewDataset::new(vec![x.clone(), x.clone()], 2).unwrap();
        let s = forward_ensemble(&enc, &d).unwrap();
        assert_abs_diff_eq!(s.probs, array![[0.5, 0.5]], epsilon = 1e-12);

        let single = TaskEncoder::new(vec![a.clone()], 2).unwrap();
        let d1 = MultiViewDataset::new(vec![x.clone()], 2).unwrap();
        assert_eq!(
            forward_ensemble(&single, &d1).unwrap(),
            forward_head(&a, &x).unwrap()
        );
    }

    #[test]
    fn hard_assign_examples() {
        let s = SoftLabeling {
            probs: array![[0.2, 0.7, 0.1], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]],
        };
        assert_eq!(hard_assign(&s), vec![1, 0, 2]);
        let labels = vec![2, 0, 1, 1];
        assert_eq!(hard_assign(&SoftLabeling::<f64>::one_hot(&labels, 3)), labels);
    }

    #[test]
    fn label_distribution_examples() {
        let s = SoftLabeling {
            probs: array![[0.9, 0.1], [0.7, 0.3]],
        };
        assert_abs_diff_eq!(label_distribution(&s), array![0.8, 0.2], epsilon = 1e-12);
        let s = SoftLabeling {
            probs: array![[1.0, 0.0], [0.0, 1.0]],
        };
        assert_abs_diff_eq!(label_distribution(&s), array![0.5, 0.5], epsilon = 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&array![0.25, 0.75]), 0.5623, epsilon = 1e-4);
        assert_eq!(entropy(&array![1.0, 0.0, 0.0]), 0.0);
        let x = view(array![[1.0, 2.0], [3.0, -1.0]]);
        let heads = (0..2)
            .map(|k| head(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], Array1::zeros(3), k))
            .collect();
        let enc = TaskEncoder::new(heads, 3).unwrap();
        let d = MultiViewDataset::new(vec![x.clone(), x], 3).unwrap();
        assert_abs_diff_eq!(
            entropy_regularizer(&enc, &d).unwrap(),
            2.0 * 3.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn random_encoder_outputs_are_simplex_rows() {
        let mut rng = seeded(3);
        for _ in 0..200 {
            let enc = TaskEncoder::<f64>::random(&[3, 4], 4, &mut rng);
            let d = MultiViewDataset::new(
                vec![
                    view(Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 - 6.0)),
                    view(Array2::from_shape_fn((5, 4), |(i, j)| ((i + j) % 3) as f64)),
                ],
                4,
            )
            .unwrap();
            let s = forward_ensemble(&enc, &d).unwrap();
            for row in s.probs.rows() {
                assert!(row.iter().all(|&v| v >= 0.0));
                assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = seeded(1);
        let enc = TaskEncoder::<f32>::random(&[2], 3, &mut rng);
        let v = EmbeddingMatrix::new("f", array![[1.0f32, 2.0], [0.5, -1.0]]).unwrap();
        let s = forward_head(&enc.heads[0], &v).unwrap();
        for row in s.probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }
}
