use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::embedding::{concatenate_views, MultiViewDataset};
use crate::rng::{derive_seed, seeded, ChaCha8Rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub rel_tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 1000,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub labels: Vec<usize>,
    pub centroids: Array2<T>,
    pub inertia: T,
    /// Inertia after every assignment step of the kept restart.
    pub inertia_trace: Vec<T>,
    pub restart: usize,
}

fn sq_dist<T: Scalar>(a: ndarray::ArrayView1<'_, T>, b: ndarray::ArrayView1<'_, T>) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding.
fn init_centroids<T: Scalar>(x: ArrayView2<'_, T>, k: usize, rng: &mut ChaCha8Rng) -> Array2<T> {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut closest: Array1<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first)).as_f64()).collect();
    for c in 1..k {
        let total: f64 = closest.sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for i in 0..n {
            let d = sq_dist(x.row(i), x.row(pick)).as_f64();
            if d < closest[i] {
                closest[i] = d;
            }
        }
    }
    centroids
}

/// Nearest centroid per row (ties to the lowest index) and the squared
/// distance to it.
fn assign<T: Scalar>(x: ArrayView2<'_, T>, centroids: &Array2<T>) -> (Vec<usize>, Vec<T>) {
    let mut labels = Vec::with_capacity(x.nrows());
    let mut dists = Vec::with_capacity(x.nrows());
    for row in x.rows() {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (c, cen) in centroids.rows().into_iter().enumerate() {
            let d = sq_dist(row, cen);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    (labels, dists)
}

fn lloyd<T: Scalar>(x: ArrayView2<'_, T>, k: usize, cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> KMeansResult<T> {
    let mut centroids = init_centroids(x, k, rng);
    let mut trace = Vec::new();
    let (mut labels, mut dists) = assign(x, &centroids);
    loop {
        let inertia: T = dists.iter().copied().sum();
        if let Some(&prev) = trace.last() {
            let prev: T = prev;
            let rel = if prev > T::zero() {
                ((prev - inertia) / prev).as_f64()
            } else {
                0.0
            };
            trace.push(inertia);
            if rel < cfg.rel_tol || trace.len() >= cfg.max_iter {
                break;
            }
        } else {
            trace.push(inertia);
            if cfg.max_iter <= 1 {
                break;
            }
        }
        // update step
        let mut sums = Array2::<T>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (row, &l) in x.rows().into_iter().zip(&labels) {
            let mut s = sums.row_mut(l);
            s.zip_mut_with(&row, |a, &b| *a = *a + b);
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let cnt = T::from_count(counts[c]);
                centroids.row_mut(c).assign(&sums.row(c).mapv(|v| v / cnt));
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed at the point farthest from its own centroid
                let (far, _) = dists
                    .iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
                centroids.row_mut(c).assign(&x.row(far));
                dists[far] = T::zero();
            }
        }
        let next = assign(x, &centroids);
        labels = next.0;
        dists = next.1;
    }
    let inertia = *trace.last().unwrap();
    KMeansResult {
        labels,
        centroids,
        inertia,
        inertia_trace: trace,
        restart: 0,
    }
}

/// Lloyd's algorithm with seeded k-means++ restarts; keeps the lowest
/// inertia (earliest restart on ties).
pub fn kmeans<T: Scalar>(x: ArrayView2<'_, T>, k: usize, seed: u64, cfg: &KMeansConfig) -> KMeansResult<T> {
    assert!(k >= 1 && x.nrows() >= k, "need at least k rows");
    let mut best: Option<KMeansResult<T>> = None;
    for restart in 0..cfg.n_init.max(1) {
        let mut rng = seeded(derive_seed(seed, restart as u64));
        let mut r = lloyd(x, k, cfg, &mut rng);
        r.restart = restart;
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    best.unwrap()
}

/// K-means on the concatenation of row-normalized views.
pub fn kmeans_baseline<T: Scalar>(d: &MultiViewDataset<T>, n_classes: usize, seed: u64) -> KMeansResult<T> {
    let x = concatenate_views(d);
    kmeans(x.data(), n_classes, seed, &KMeansConfig::default())
}
