//! Embedding matrices, multi-view datasets, and their on-disk formats.

mod folds;
mod io;

pub use folds::{make_folds, random_split, SplitSpec};
pub use io::{
    load_embeddings, read_csv, read_emb1, read_labels, read_split, write_csv, write_emb1,
    write_labels, write_split, Format,
};

use ndarray::{concatenate, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One representation space: `n_samples × dim` features, row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    name: String,
    data: Array2<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    /// Validates shape and finiteness.
    pub fn new(name: impl Into<String>, data: Array2<T>) -> Result<Self> {
        let name = name.into();
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyMatrix(format!(
                "{name}: {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row, col });
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { name, data })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    location: format!("row {i}"),
                    expected: dim,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let data = Array2::from_shape_vec((n, dim), flat).expect("shape checked");
        Self::new(name, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.data.row(i)
    }

    pub fn into_data(self) -> Array2<T> {
        self.data
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            data: self.data.select(Axis(0), indices),
        }
    }

    /// Element-type conversion. Lossy when narrowing.
    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            name: self.name.clone(),
            data: self.data.mapv(|v| U::lit(v.as_f64())),
        }
    }
}

/// Scales every row to unit Euclidean norm. All-zero rows pass through.
pub fn l2_normalize<T: Scalar>(m: &EmbeddingMatrix<T>) -> EmbeddingMatrix<T> {
    let mut data = m.data.clone();
    for mut row in data.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > T::zero() {
            row.mapv_inplace(|v| v / norm);
        }
    }
    EmbeddingMatrix {
        name: m.name.clone(),
        data,
    }
}

/// Which side of a train/test split a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// `K` aligned views of the same `N` samples.
#[derive(Debug, Clone)]
pub struct MultiViewDataset<T> {
    views: Vec<EmbeddingMatrix<T>>,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    split: Option<Vec<Split>>,
}

impl<T: Scalar> MultiViewDataset<T> {
    pub fn new(views: Vec<EmbeddingMatrix<T>>, n_classes: usize) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::InvalidConfig("dataset needs at least one view".into()));
        };
        if n_classes == 0 {
            return Err(Error::InvalidConfig("n_classes must be at least 1".into()));
        }
        let n = first.n_samples();
        for v in &views[1..] {
            if v.n_samples() != n {
                return Err(Error::DimensionMismatch {
                    location: format!("sample count of view '{}'", v.name()),
                    expected: n,
                    found: v.n_samples(),
                });
            }
        }
        Ok(Self {
            views,
            labels: None,
            n_classes,
            split: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.n_samples(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.n_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: self.n_classes,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_split(mut self, split: Vec<Split>) -> Result<Self> {
        if split.len() != self.n_samples() {
            return Err(Error::LengthMismatch {
                left: split.len(),
                right: self.n_samples(),
            });
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn views(&self) -> &[EmbeddingMatrix<T>] {
        &self.views
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].n_samples()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn split(&self) -> Option<&[Split]> {
        self.split.as_deref()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(EmbeddingMatrix::dim).collect()
    }

    /// Same dataset with every view row-normalized.
    pub fn normalized(&self) -> Self {
        Self {
            views: self.views.iter().map(l2_normalize).collect(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            split: self.split.clone(),
        }
    }

    /// Restriction to the samples at `indices`. Labels follow; the split
    /// mask is dropped.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            views: self.views.iter().map(|v| v.select_rows(indices)).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            n_classes: self.n_classes,
            split: None,
        }
    }
}

/// Per-view L2 normalization followed by horizontal concatenation.
pub fn concatenate_views<T: Scalar>(d: &MultiViewDataset<T>) -> EmbeddingMatrix<T> {
    let normalized: Vec<_> = d.views.iter().map(l2_normalize).collect();
    let parts: Vec<_> = normalized.iter().map(|m| m.data.view()).collect();
    let data = concatenate(Axis(1), &parts).expect("views share sample count");
    let name = d
        .views
        .iter()
        .map(|v| v.name.as_str())
        .collect::<Vec<_>>()
        .join("+");
    EmbeddingMatrix { name, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn mat(rows: Array2<f64>) -> EmbeddingMatrix<f64> {
        EmbeddingMatrix::new("m", rows).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            EmbeddingMatrix::new("x", array![[1.0, f64::NAN]]),
            Err(Error::NonFiniteValue { row: 0, col: 1 })
        ));
        assert!(matches!(
            EmbeddingMatrix::<f64>::new("x", Array2::zeros((0, 3))),
            Err(Error::EmptyMatrix(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        let m = l2_normalize(&mat(array![[3.0, 4.0], [0.0, 0.0], [1.0, 1.0]]));
        assert_abs_diff_eq!(m.data().row(0), array![0.6, 0.8].view(), epsilon = 1e-12);
        assert_eq!(m.data().row(1), array![0.0, 0.0].view());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m.data().row(2), array![h, h].view(), epsilon = 1e-6);
    }

    #[test]
    fn concatenation_examples() {
        let single = MultiViewDataset::new(vec![mat(array![[3.0, 4.0]])], 2).unwrap();
        assert_eq!(
            concatenate_views(&single).data(),
            l2_normalize(&single.views()[0]).data()
        );

        let two = MultiViewDataset::new(vec![mat(array![[2.0]]), mat(array![[-5.0]])], 2).unwrap();
        assert_eq!(concatenate_views(&two).data(), array![[1.0, -1.0]].view());

        let wide = MultiViewDataset::new(
            vec![mat(Array2::ones((4, 3))), mat(Array2::ones((4, 5)))],
            2,
        )
        .unwrap();
        assert_eq!(concatenate_views(&wide).dim(), 8);
    }

    #[test]
    fn dataset_invariants_enforced() {
        let a = mat(Array2::ones((3, 2)));
        let b = mat(Array2::ones((4, 2)));
        assert!(MultiViewDataset::new(vec![a.clone(), b], 2).is_err());
        let d = MultiViewDataset::new(vec![a], 2).unwrap();
        assert!(d.clone().with_labels(vec![0, 1]).is_err());
        assert!(matches!(
            d.clone().with_labels(vec![0, 1, 2]),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
        assert!(d.with_labels(vec![0, 1, 1]).is_ok());
    }

    fn nonzero_matrix() -> impl Strategy<Value = Array2<f64>> {
        (1usize..6, 1usize..5).prop_flat_map(|(n, q)| {
            prop::collection::vec(0.1f64..10.0, n * q).prop_flat_map(move |mags| {
                prop::collection::vec(any::<bool>(), n * q).prop_map(move |signs| {
                    let v: Vec<f64> = mags
                        .iter()
                        .zip(&signs)
                        .map(|(m, s)| if *s { *m } else { -*m })
                        .collect();
                    Array2::from_shape_vec((n, q), v).unwrap()
                })
            })
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(data in nonzero_matrix()) {
            let once = l2_normalize(&mat(data));
            let twice = l2_normalize(&once);
            let diff = (&once.data - &twice.data).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            prop_assert!(diff < 1e-7);
        }

        #[test]
        fn concatenated_rows_have_norm_sqrt_k(a in nonzero_matrix(), k in 1usize..4) {
            let views: Vec<_> = (0..k).map(|i| mat(a.mapv(|v| v * (i as f64 + 1.0)))).collect();
            let d = MultiViewDataset::new(views, 2).unwrap();
            let c = concatenate_views(&d);
            for row in c.data().rows() {
                let n = row.dot(&row).sqrt();
                prop_assert!((n - (k as f64).sqrt()).abs() < 1e-9);
            }
        }
    }
}
