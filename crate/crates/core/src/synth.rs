//! Synthetic multi-view blob benchmark.
//!
//! Classes are Gaussian blobs with unit within-class standard deviation in a
//! latent space whose dimension is the smallest view dimension. Centroids
//! are scaled simplex vertices, so every pair of centroids is exactly
//! `separation` apart. Each view embeds the latent points through its own
//! random matrix with orthonormal columns.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::embedding::{EmbeddingMatrix, MultiViewDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, ChaCha8Rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ClassBalance {
    Balanced,
    Proportions(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_classes: usize,
    /// One entry per view.
    pub dims: Vec<usize>,
    /// Inter-centroid distance over within-blob standard deviation.
    pub separation: f64,
    pub balance: ClassBalance,
    pub seed: u64,
}

impl SynthSpec {
    pub fn blobs(n_samples: usize, n_classes: usize, dims: Vec<usize>, separation: f64, seed: u64) -> Self {
        Self {
            n_samples,
            n_classes,
            dims,
            separation,
            balance: ClassBalance::Balanced,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::InvalidConfig("separation must be positive".into()));
        }
        if self.n_classes == 0 || self.n_samples < self.n_classes {
            return Err(Error::TooFewSamples {
                n_samples: self.n_samples,
                required: self.n_classes.max(1),
            });
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidConfig("need at least one view".into()));
        }
        let latent = *self.dims.iter().min().unwrap();
        if latent < self.n_classes {
            return Err(Error::InvalidConfig(format!(
                "smallest view dimension {latent} is below the class count {}",
                self.n_classes
            )));
        }
        if let ClassBalance::Proportions(p) = &self.balance {
            if p.len() != self.n_classes || p.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidConfig("one non-negative proportion per class".into()));
            }
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig("proportions must sum to 1".into()));
            }
        }
        Ok(())
    }

    fn class_counts(&self) -> Vec<usize> {
        let weights = match &self.balance {
            ClassBalance::Balanced => vec![1.0 / self.n_classes as f64; self.n_classes],
            ClassBalance::Proportions(p) => p.clone(),
        };
        // largest-remainder rounding
        let exact: Vec<f64> = weights.iter().map(|w| w * self.n_samples as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
        let mut order: Vec<usize> = (0..self.n_classes).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        let mut missing = self.n_samples - counts.iter().sum::<usize>();
        for &c in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[c] += 1;
            missing -= 1;
        }
        counts
    }
}

/// Random `rows × cols` matrix with orthonormal columns (Gram-Schmidt on a
/// Gaussian draw).
fn orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    loop {
        let mut m = Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal));
        let mut ok = true;
        for j in 0..cols {
            let mut col = m.column(j).to_owned();
            for i in 0..j {
                let prev = m.column(i);
                let p = col.dot(&prev);
                col.scaled_add(-p, &prev);
            }
            let n = col.dot(&col).sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            m.column_mut(j).assign(&(col / n));
        }
        if ok {
            return m;
        }
    }
}

/// Generated views plus the ground-truth labels.
pub fn synth<T: Scalar>(spec: &SynthSpec) -> Result<MultiViewDataset<T>> {
    spec.validate()?;
    let latent = *spec.dims.iter().min().unwrap();
    let mut rng = seeded(spec.seed);

    let basis = orthonormal_columns(latent, spec.n_classes, &mut rng);
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let centroids: Vec<Array1<f64>> = (0..spec.n_classes)
        .map(|c| basis.column(c).to_owned() * scale)
        .collect();

    let mut labels: Vec<usize> = spec
        .class_counts()
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);

    let mut latent_points = Array2::<f64>::zeros((spec.n_samples, latent));
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..latent {
            latent_points[[i, j]] = centroids[c][j] + rng.sample::<f64, _>(StandardNormal);
        }
    }

    let views = spec
        .dims
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let mut view_rng = seeded(derive_seed(spec.seed, k as u64 + 1));
            let map = orthonormal_columns(q, latent, &mut view_rng);
            let data = latent_points.dot(&map.t()).mapv(T::lit);
            EmbeddingMatrix::new(format!("view{k}"), data)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiViewDataset::new(views, spec.n_classes)?.with_labels(labels)
}
