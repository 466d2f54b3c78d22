//! Alternating optimization of the task encoder against per-space linear
//! classifiers, using the partial derivative of the outer objective as the
//! hypergradient.

use std::time::{Duration, Instant};

use ndarray::{Array2, Ix1, Ix2};
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::embedding::{EmbeddingMatrix, MultiViewDataset};
use crate::encoder::{
    average_heads, backprop_head, distinct_classes, entropy, entropy_grad_wrt_probs,
    forward_ensemble, forward_heads, hard_assign, label_distribution, HeadGradient, SoftLabeling,
    TaskEncoder,
};
use crate::error::{Error, Result};
use crate::inner::{cross_entropy_with_log_probs, fit_in_place, InnerClassifier, InnerConfig};
use crate::linalg::log_softmax_rows;
use crate::optim::{AdamConfig, AdamState};
use crate::rng::{seeded, ChaCha8Rng, GENERATOR_NAME};
use crate::scalar::Scalar;

/// Learning rates searched by default, for both levels.
pub const DEFAULT_LEARNING_RATES: [f64; 5] = [0.01, 0.005, 0.001, 0.0005, 0.0001];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub n_classes: usize,
    /// Entropy weight.
    pub gamma: T,
    pub outer_iters: usize,
    pub batch_size: usize,
    pub outer_lr: T,
    pub outer_adam: AdamConfig<T>,
    pub inner: InnerConfig<T>,
    pub seed: u64,
    /// Row-normalize every view before training.
    pub normalize: bool,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            gamma: T::lit(10.0),
            outer_iters: 6000,
            batch_size: 10_000,
            outer_lr: T::lit(1e-3),
            outer_adam: AdamConfig::default(),
            inner: InnerConfig::default(),
            seed: 0,
            normalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 {
            return Err(Error::InvalidConfig("n_classes must be at least 1".into()));
        }
        if !(self.gamma >= T::zero()) {
            return Err(Error::InvalidConfig("gamma must be non-negative".into()));
        }
        if self.outer_iters == 0 {
            return Err(Error::InvalidConfig("outer_iters must be at least 1".into()));
        }
        if self.batch_size < self.n_classes {
            return Err(Error::InvalidConfig(format!(
                "batch_size {} is smaller than n_classes {}",
                self.batch_size, self.n_classes
            )));
        }
        if !(self.outer_lr > T::zero()) {
            return Err(Error::InvalidConfig("outer learning rate must be positive".into()));
        }
        self.inner.validate()
    }

    /// Flat `key = value` rendering, the same keys the CLI config accepts.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("classes", self.n_classes.to_string()),
            ("gamma", self.gamma.to_string()),
            ("iters", self.outer_iters.to_string()),
            ("batch", self.batch_size.to_string()),
            ("outer-lr", self.outer_lr.to_string()),
            ("inner-lr", self.inner.learning_rate.to_string()),
            ("inner-steps", self.inner.steps.to_string()),
            ("warm-start", self.inner.warm_start.to_string()),
            ("seed", self.seed.to_string()),
            ("normalize", self.normalize.to_string()),
            ("adam-beta1", self.outer_adam.beta1.to_string()),
            ("adam-beta2", self.outer_adam.beta2.to_string()),
            ("adam-eps", self.outer_adam.eps.to_string()),
        ]
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub config: TrainConfig<T>,
    pub encoder: TaskEncoder<T>,
    /// Encoder output on every sample after training.
    pub soft_labels: SoftLabeling<T>,
    pub hard_labels: Vec<usize>,
    /// Outer objective per iteration, measured on that iteration's batch.
    pub loss_trace: Vec<T>,
    /// `R(θ)` per iteration on the batch.
    pub entropy_trace: Vec<T>,
    pub distinct_classes: usize,
    /// Fewer than `C` classes in use.
    pub degenerate: bool,
    pub wall_clock: Duration,
    pub seed: u64,
    pub generator: &'static str,
}

/// Objective value, its entropy part, and the partial gradient per head.
#[derive(Debug, Clone)]
pub struct OuterEvaluation<T> {
    pub objective: T,
    pub entropy: T,
    pub grads: Vec<HeadGradient<T>>,
}

fn check_classifiers<T: Scalar>(
    enc: &TaskEncoder<T>,
    classifiers: &[InnerClassifier<T>],
    views: &[EmbeddingMatrix<T>],
) -> Result<()> {
    if views.len() != enc.n_heads() {
        return Err(Error::ViewCountMismatch {
            expected: enc.n_heads(),
            found: views.len(),
        });
    }
    if classifiers.len() != views.len() {
        return Err(Error::ViewCountMismatch {
            expected: views.len(),
            found: classifiers.len(),
        });
    }
    for (clf, v) in classifiers.iter().zip(views) {
        let expected = (enc.n_classes, v.dim());
        if clf.weights.dim() != expected {
            return Err(Error::ShapeMismatch {
                context: "inner classifier weights",
                expected,
                found: clf.weights.dim(),
            });
        }
    }
    Ok(())
}

/// `Σ_k CE(w_k φ_k, τ_θ) − γ R(θ)` on the given views.
pub fn turtle_objective<T: Scalar>(
    enc: &TaskEncoder<T>,
    classifiers: &[InnerClassifier<T>],
    views: &[EmbeddingMatrix<T>],
    gamma: T,
) -> Result<T> {
    check_classifiers(enc, classifiers, views)?;
    let per_head = forward_heads(enc, views)?;
    let tau = average_heads(&per_head);
    let ce: T = classifiers
        .iter()
        .zip(views)
        .map(|(clf, v)| cross_entropy_with_log_probs(&log_softmax_rows(clf.logits(v.data()).view()), &tau.probs))
        .sum();
    let r: T = per_head.iter().map(|s| entropy(&label_distribution(s))).sum();
    Ok(ce - gamma * r)
}

/// Objective and `∂/∂θ` with every classifier held fixed.
///
/// The cross-entropy is differentiated through its target `τ_θ`; the
/// dependence of the classifiers on `θ` is dropped.
pub fn outer_gradient<T: Scalar>(
    enc: &TaskEncoder<T>,
    classifiers: &[InnerClassifier<T>],
    views: &[EmbeddingMatrix<T>],
    gamma: T,
) -> Result<OuterEvaluation<T>> {
    check_classifiers(enc, classifiers, views)?;
    let n = T::from_count(views[0].n_samples());
    let k_heads = T::from_count(enc.n_heads());
    let per_head = forward_heads(enc, views)?;
    let tau = average_heads(&per_head);

    let mut ce = T::zero();
    let mut dtau: Array2<T> = Array2::zeros(tau.probs.raw_dim());
    for (clf, v) in classifiers.iter().zip(views) {
        let log_p = log_softmax_rows(clf.logits(v.data()).view());
        ce = ce + cross_entropy_with_log_probs(&log_p, &tau.probs);
        dtau.zip_mut_with(&log_p, |g, &lp| *g = *g - lp / n);
    }
    let dtau_per_head = dtau.mapv(|g| g / k_heads);

    let mut r = T::zero();
    let mut grads = Vec::with_capacity(enc.n_heads());
    for ((head, view), s) in enc.heads.iter().zip(views).zip(&per_head) {
        r = r + entropy(&label_distribution(s));
        let mut upstream = entropy_grad_wrt_probs(&s.probs);
        upstream.zip_mut_with(&dtau_per_head, |u, &g| *u = g - gamma * *u);
        grads.push(backprop_head(head, view.data(), &s.probs, &upstream));
    }
    Ok(OuterEvaluation {
        objective: ce - gamma * r,
        entropy: r,
        grads,
    })
}

/// Adam moments for every encoder parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOptimizer<T> {
    direction: Vec<AdamState<T, Ix2>>,
    gain: Vec<AdamState<T, Ix1>>,
}

impl<T: Scalar> EncoderOptimizer<T> {
    pub fn new(enc: &TaskEncoder<T>) -> Self {
        Self {
            direction: enc
                .heads
                .iter()
                .map(|h| AdamState::zeros(h.direction.raw_dim()))
                .collect(),
            gain: enc
                .heads
                .iter()
                .map(|h| AdamState::zeros(h.gain.raw_dim()))
                .collect(),
        }
    }
}

fn all_finite<T: Scalar>(grads: &[HeadGradient<T>]) -> bool {
    grads
        .iter()
        .all(|g| g.direction.iter().chain(g.gain.iter()).all(|v| v.is_finite()))
}

/// One Adam update of the encoder from the partial hypergradient. Returns
/// the updated encoder together with the objective measured before the step.
pub fn outer_step<T: Scalar>(
    enc: &TaskEncoder<T>,
    opt: &mut EncoderOptimizer<T>,
    classifiers: &[InnerClassifier<T>],
    views: &[EmbeddingMatrix<T>],
    cfg: &TrainConfig<T>,
) -> Result<(TaskEncoder<T>, OuterEvaluation<T>)> {
    let eval = outer_gradient(enc, classifiers, views, cfg.gamma)?;
    if !eval.objective.is_finite() || !all_finite(&eval.grads) {
        return Err(Error::NonFiniteGradient {
            context: "task encoder".into(),
        });
    }
    let mut next = enc.clone();
    for (k, (head, g)) in next.heads.iter_mut().zip(&eval.grads).enumerate() {
        opt.direction[k].update(&mut head.direction, &g.direction, cfg.outer_lr, &cfg.outer_adam);
        opt.gain[k].update(&mut head.gain, &g.gain, cfg.outer_lr, &cfg.outer_adam);
    }
    Ok((next, eval))
}

fn draw_batch(rng: &mut ChaCha8Rng, n: usize, batch: usize) -> Option<Vec<usize>> {
    if batch >= n {
        return None;
    }
    let mut idx = sample(rng, n, batch).into_vec();
    idx.sort_unstable();
    Some(idx)
}

/// Trains a task encoder on `d` and labels every sample with it.
pub fn turtle_train<T: Scalar>(d: &MultiViewDataset<T>, cfg: &TrainConfig<T>) -> Result<TrainReport<T>> {
    cfg.validate()?;
    let n = d.n_samples();
    if n < cfg.n_classes {
        return Err(Error::TooFewSamples {
            n_samples: n,
            required: cfg.n_classes,
        });
    }
    if d.n_classes() != cfg.n_classes {
        return Err(Error::InvalidConfig(format!(
            "dataset declares {} classes, config {}",
            d.n_classes(),
            cfg.n_classes
        )));
    }
    let started = Instant::now();
    let normalized;
    let data = if cfg.normalize {
        normalized = d.normalized();
        &normalized
    } else {
        d
    };
    let mut rng = seeded(cfg.seed);
    let dims = data.dims();
    let mut encoder = TaskEncoder::random(&dims, cfg.n_classes, &mut rng);
    let mut opt = EncoderOptimizer::new(&encoder);
    let cold: Vec<InnerClassifier<T>> = dims
        .iter()
        .map(|&q| InnerClassifier::zeros(cfg.n_classes, q))
        .collect();
    let mut classifiers = cold.clone();
    let mut loss_trace = Vec::with_capacity(cfg.outer_iters);
    let mut entropy_trace = Vec::with_capacity(cfg.outer_iters);

    for iter in 0..cfg.outer_iters {
        let subset;
        let views: &[EmbeddingMatrix<T>] = match draw_batch(&mut rng, n, cfg.batch_size) {
            Some(idx) => {
                subset = data.views().iter().map(|v| v.select_rows(&idx)).collect::<Vec<_>>();
                &subset
            }
            None => data.views(),
        };
        let heads = forward_heads(&encoder, views)?;
        let tau = average_heads(&heads);
        if !cfg.inner.warm_start {
            classifiers.clone_from(&cold);
        }
        for (clf, v) in classifiers.iter_mut().zip(views) {
            fit_in_place(clf, v.data(), &tau, &cfg.inner).map_err(|e| annotate(e, iter))?;
        }
        let (next, eval) =
            outer_step(&encoder, &mut opt, &classifiers, views, cfg).map_err(|e| annotate(e, iter))?;
        encoder = next;
        loss_trace.push(eval.objective);
        entropy_trace.push(eval.entropy);
        if log::log_enabled!(log::Level::Debug) && (iter + 1) % 500 == 0 {
            log::debug!(
                "iter {}: loss {:.6} entropy {:.6}",
                iter + 1,
                eval.objective,
                eval.entropy
            );
        }
    }

    let soft_labels = forward_ensemble(&encoder, data)?;
    let hard_labels = hard_assign(&soft_labels);
    let used = distinct_classes(&hard_labels);
    Ok(TrainReport {
        config: cfg.clone(),
        encoder,
        soft_labels,
        hard_labels,
        loss_trace,
        entropy_trace,
        distinct_classes: used,
        degenerate: used < cfg.n_classes,
        wall_clock: started.elapsed(),
        seed: cfg.seed,
        generator: GENERATOR_NAME,
    })
}

fn annotate(e: Error, iter: usize) -> Error {
    match e {
        Error::NonFiniteGradient { context } => Error::NonFiniteGradient {
            context: format!("{context} at outer iteration {iter}"),
        },
        other => other,
    }
}

/// Learning-rate and start-mode combinations to search.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid<T> {
    pub outer_lrs: Vec<T>,
    pub inner_lrs: Vec<T>,
    pub warm_start_options: Vec<bool>,
}

impl<T: Scalar> Default for HyperGrid<T> {
    fn default() -> Self {
        let lrs: Vec<T> = DEFAULT_LEARNING_RATES.iter().map(|&v| T::lit(v)).collect();
        Self {
            outer_lrs: lrs.clone(),
            inner_lrs: lrs,
            warm_start_options: vec![true, false],
        }
    }
}

impl<T: Scalar> HyperGrid<T> {
    pub fn len(&self) -> usize {
        self.outer_lrs.len() * self.inner_lrs.len() * self.warm_start_options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concrete configurations in outer-lr, inner-lr, start-mode order. Run
    /// `i` is seeded with `base.seed + i`.
    pub fn configs(&self, base: &TrainConfig<T>) -> Vec<TrainConfig<T>> {
        let mut out = Vec::with_capacity(self.len());
        for &outer in &self.outer_lrs {
            for &inner in &self.inner_lrs {
                for &warm in &self.warm_start_options {
                    let mut cfg = base.clone();
                    cfg.outer_lr = outer;
                    cfg.inner.learning_rate = inner;
                    cfg.inner.warm_start = warm;
                    cfg.seed = base.seed.wrapping_add(out.len() as u64);
                    out.push(cfg);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct GridRun<T> {
    pub config: TrainConfig<T>,
    pub outcome: std::result::Result<TrainReport<T>, String>,
}

/// One training run per grid point. Failed runs are recorded, not fatal.
/// `jobs > 1` trains runs in parallel; results keep grid order.
pub fn run_grid<T: Scalar>(
    d: &MultiViewDataset<T>,
    grid: &HyperGrid<T>,
    base: &TrainConfig<T>,
    jobs: usize,
) -> Result<Vec<GridRun<T>>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("hyperparameter grid is empty".into()));
    }
    let configs = grid.configs(base);
    let run = |cfg: TrainConfig<T>| {
        let outcome = turtle_train(d, &cfg).map_err(|e| e.to_string());
        if let Err(e) = &outcome {
            log::warn!("grid run failed: {e}");
        }
        GridRun { config: cfg, outcome }
    };
    if jobs <= 1 {
        return Ok(configs.into_iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| configs.into_par_iter().map(run).collect()))
}
