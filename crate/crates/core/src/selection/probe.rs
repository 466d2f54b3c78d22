use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::embedding::{EmbeddingMatrix, Split};
use crate::error::{Error, Result};
use crate::linalg::{gram_spectral_radius, log_softmax_rows, softmax_rows};
use crate::optim::{lbfgs, LbfgsConfig};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Desk-scale default grid size.
pub const DEFAULT_GRID_SIZE: usize = 13;
/// The wide grid size.
pub const FULL_GRID_SIZE: usize = 96;
/// Share of the training split held out to pick the penalty.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// `n` log-spaced penalties from 1e-6 to 1e6.
pub fn log_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub accuracy: f64,
    pub lambda: f64,
    /// `(lambda, validation accuracy)` for every grid value.
    pub validation: Vec<(f64, f64)>,
}

/// Multinomial logistic regression, `mean CE + lambda/2 * ||W||^2`, bias
/// unpenalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> LogisticModel<T> {
    pub fn logits(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        x.dot(&self.weights.t()) + &self.bias
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Vec<usize> {
        self.logits(x)
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                    .0
            })
            .collect()
    }
}

pub fn fit_logistic<T: Scalar>(x: ArrayView2<'_, T>, labels: &[usize], n_classes: usize, lambda: T) -> LogisticModel<T> {
    let (n, q) = x.dim();
    let c = n_classes;
    // W = U / sqrt(lambda + s) evens out the curvature across penalties
    let s = gram_spectral_radius(x);
    let scale = T::one() / (lambda + s).sqrt().max(T::tiny());
    let nt = T::from_count(n);
    let mut onehot = Array2::<T>::zeros((n, c));
    for (i, &l) in labels.iter().enumerate() {
        onehot[[i, l]] = T::one();
    }
    let unpack = |p: &Array1<T>| -> (Array2<T>, Array1<T>) {
        let u = p.slice(s![..c * q]).to_owned().into_shape_with_order((c, q)).unwrap();
        (u.mapv(|v| v * scale), p.slice(s![c * q..]).to_owned())
    };
    let objective = |p: &Array1<T>| -> (T, Array1<T>) {
        let (w, b) = unpack(p);
        let logits = x.dot(&w.t()) + &b;
        let logp = log_softmax_rows(logits.view());
        let ce = -(&logp * &onehot).sum() / nt;
        let penalty = lambda * w.iter().map(|&v| v * v).sum() / T::lit(2.0);
        let dz = (softmax_rows(logits.view()) - &onehot).mapv(|v| v / nt);
        let dw = dz.t().dot(&x) + &w.mapv(|v| v * lambda);
        let db = dz.sum_axis(Axis(0));
        let mut g = Array1::zeros(c * q + c);
        g.slice_mut(s![..c * q]).assign(&Array1::from_iter(dw.iter().map(|&v| v * scale)));
        g.slice_mut(s![c * q..]).assign(&db);
        (ce + penalty, g)
    };
    let r = lbfgs(objective, Array1::zeros(c * q + c), &LbfgsConfig::default());
    if !r.converged {
        log::debug!("probe solver stopped after {} iterations", r.iterations);
    }
    let (weights, bias) = unpack(&r.x);
    LogisticModel { weights, bias }
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len().max(1) as f64
}

/// Supervised reference: picks the penalty on a validation carve-out of the
/// training split, refits on all of it and reports test accuracy. Ties on
/// validation accuracy go to the larger penalty.
pub fn linear_probe<T: Scalar>(
    view: &EmbeddingMatrix<T>,
    labels: &[usize],
    split: &[Split],
    l2_grid: &[f64],
    seed: u64,
) -> Result<ProbeReport> {
    let n = view.n_samples();
    if labels.len() != n || split.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len().max(split.len()),
            right: n,
        });
    }
    if l2_grid.is_empty() || l2_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidConfig("l2 grid must be non-empty with positive finite values".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let train: Vec<usize> = (0..n).filter(|&i| split[i] == Split::Train).collect();
    let test: Vec<usize> = (0..n).filter(|&i| split[i] == Split::Test).collect();
    if train.len() < 2 || test.is_empty() {
        return Err(Error::TooFewSamples {
            n_samples: train.len().min(test.len()),
            required: 2,
        });
    }
    let mut shuffled = train.clone();
    shuffled.shuffle(&mut seeded(seed));
    let n_val = ((train.len() as f64 * VALIDATION_FRACTION).ceil() as usize).clamp(1, train.len() - 1);
    let (val, fit) = shuffled.split_at(n_val);
    let pick = |idx: &[usize]| (view.select_rows(idx), idx.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    let (x_fit, y_fit) = pick(fit);
    let (x_val, y_val) = pick(val);

    let mut validation = Vec::with_capacity(l2_grid.len());
    let mut best = (l2_grid[0], f64::NEG_INFINITY);
    for &lambda in l2_grid {
        let model = fit_logistic(x_fit.data(), &y_fit, n_classes, T::lit(lambda));
        let acc = accuracy(&model.predict(x_val.data()), &y_val);
        validation.push((lambda, acc));
        if acc > best.1 || (acc == best.1 && lambda > best.0) {
            best = (lambda, acc);
        }
    }
    let (x_train, y_train) = pick(&train);
    let (x_test, y_test) = pick(&test);
    let model = fit_logistic(x_train.data(), &y_train, n_classes, T::lit(best.0));
    Ok(ProbeReport {
        accuracy: accuracy(&model.predict(x_test.data()), &y_test),
        lambda: best.0,
        validation,
    })
}
