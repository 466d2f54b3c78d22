//! Binary exp-loss oracle: the hard-margin separator, the implicit bias of
//! gradient descent toward it, and the margin lower bound on the
//! generalization objective. Everything here runs in `f64`; the tolerances
//! involved are below what `f32` can resolve.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cosine, least_squares_min_norm, norm, power_iteration};
use crate::rng::{derive_seed, seeded};

/// Margins within this distance of 1 count as support vectors.
pub const SUPPORT_TOL: f64 = 1e-3;
pub const KKT_TOL: f64 = 1e-6;
pub const SVM_MAX_ITER: usize = 1_000_000;
/// Consecutive loss increases that count as divergence.
pub const DIVERGENCE_PATIENCE: usize = 10;
/// Largest N accepted by the brute-force labeling search.
pub const MAX_ENUMERABLE: usize = 16;

const SEPARABILITY_MAX_ITER: usize = 200_000;
const KKT_CHECK_EVERY: usize = 25;

/// How the points are labeled.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Explicit ±1 labels.
    Labels(Array1<f64>),
    /// Encoder parameters θ; targets are `tanh(θᵀx)` and labels their signs.
    Encoder(Array1<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTask {
    points: Array2<f64>,
    targets: Targets,
}

fn check_points(points: &Array2<f64>) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyMatrix("binary task points".into()));
    }
    if let Some(((row, col), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteValue { row, col });
    }
    Ok(())
}

impl BinaryTask {
    pub fn with_labels(points: Array2<f64>, labels: &[f64]) -> Result<Self> {
        check_points(&points)?;
        if labels.len() != points.nrows() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: points.nrows(),
            });
        }
        if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidConfig("labels must be +1 or -1".into()));
        }
        Ok(Self {
            points,
            targets: Targets::Labels(Array1::from(labels.to_vec())),
        })
    }

    /// Task labeled by `sign(θᵀx)`. A point on the hyperplane has no label
    /// and makes the task unusable.
    pub fn with_theta(points: Array2<f64>, theta: Array1<f64>) -> Result<Self> {
        check_points(&points)?;
        if theta.len() != points.ncols() {
            return Err(Error::DimensionMismatch {
                location: "theta".into(),
                expected: points.ncols(),
                found: theta.len(),
            });
        }
        if theta.iter().all(|&t| t == 0.0) || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("theta must be finite and non-zero".into()));
        }
        if points.dot(&theta).iter().any(|&s| s == 0.0) {
            return Err(Error::NotSeparable);
        }
        Ok(Self {
            points,
            targets: Targets::Encoder(theta),
        })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn theta(&self) -> Option<&Array1<f64>> {
        match &self.targets {
            Targets::Encoder(t) => Some(t),
            Targets::Labels(_) => None,
        }
    }

    /// Values entering the exp loss.
    pub fn targets(&self) -> Array1<f64> {
        match &self.targets {
            Targets::Labels(l) => l.clone(),
            Targets::Encoder(t) => self.points.dot(t).mapv(f64::tanh),
        }
    }

    /// ±1 labels used by the separator.
    pub fn signs(&self) -> Array1<f64> {
        match &self.targets {
            Targets::Labels(l) => l.clone(),
            Targets::Encoder(t) => self.points.dot(t).mapv(f64::signum),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.points.rows().into_iter().map(|r| norm(r)).fold(0.0, f64::max)
    }

    /// Same task with every point multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: &self.points * factor,
            targets: self.targets.clone(),
        }
    }

    /// Same task with points rescaled so the largest has norm 1.
    pub fn unit_scaled(&self) -> Self {
        let m = self.max_norm();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            self.clone()
        }
    }

    /// Rows `y_n x_n` with sign labels.
    fn signed_points(&self) -> Array2<f64> {
        &self.points * &self.signs().insert_axis(Axis(1))
    }
}

/// `Σ exp(−τ_n wᵀx_n)`.
pub fn exp_loss(task: &BinaryTask, w: ArrayView1<'_, f64>) -> f64 {
    let t = task.targets();
    task.points.dot(&w).iter().zip(&t).map(|(s, y)| (-y * s).exp()).sum()
}

/// Step sizes below this satisfy the descent precondition at `w0`.
pub fn max_stable_eta(task: &BinaryTask, w0: ArrayView1<'_, f64>) -> f64 {
    1.0 / exp_loss(task, w0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdTrace {
    /// `M + 1` iterates starting with `w0`.
    pub iterates: Vec<Array1<f64>>,
    pub losses: Vec<f64>,
}

/// Runs `m` plain gradient steps, calling `visit(step, w, loss)` after
/// each one (and once for step 0).
fn run_gd(
    task: &BinaryTask,
    w0: &Array1<f64>,
    eta: f64,
    m: usize,
    mut visit: impl FnMut(usize, &Array1<f64>, f64),
) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {eta}")));
    }
    if w0.len() != task.dim() {
        return Err(Error::DimensionMismatch {
            location: "w0".into(),
            expected: task.dim(),
            found: w0.len(),
        });
    }
    let x = &task.points;
    let tau = task.targets();
    let mut w = w0.clone();
    let mut loss = exp_loss(task, w.view());
    visit(0, &w, loss);
    let mut rising = 0;
    for step in 1..=m {
        // ∇L = −Σ τ_n x_n exp(−τ_n wᵀx_n)
        let coef: Array1<f64> = x.dot(&w).iter().zip(&tau).map(|(s, y)| -y * (-y * s).exp()).collect();
        let grad = x.t().dot(&coef);
        w.scaled_add(-eta, &grad);
        let next = exp_loss(task, w.view());
        if !(next <= loss) {
            rising += 1;
            if rising >= DIVERGENCE_PATIENCE {
                return Err(Error::DivergenceDetected {
                    step,
                    consecutive: rising,
                });
            }
        } else {
            rising = 0;
        }
        loss = next;
        visit(step, &w, loss);
    }
    Ok(())
}

/// `m` gradient-descent steps on the exp loss, keeping every iterate.
pub fn exp_loss_gd(task: &BinaryTask, w0: &Array1<f64>, eta: f64, m: usize) -> Result<GdTrace> {
    if eta >= max_stable_eta(task, w0.view()) {
        log::warn!("step size {eta} exceeds the descent bound at w0");
    }
    let mut trace = GdTrace {
        iterates: Vec::with_capacity(m + 1),
        losses: Vec::with_capacity(m + 1),
    };
    run_gd(task, w0, eta, m, |_, w, l| {
        trace.iterates.push(w.clone());
        trace.losses.push(l);
    })?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    /// `w_SVM = Σ α_n y_n x_n`.
    pub primal: Array1<f64>,
    pub duals: Array1<f64>,
    /// Indices whose margin is within [`SUPPORT_TOL`] of 1.
    pub support_set: Vec<usize>,
    /// `‖w_SVM‖²`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Projection onto the probability simplex.
fn project_simplex(v: &Array1<f64>) -> Array1<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            shift = t;
        }
    }
    v.mapv(|x| (x - shift).max(0.0))
}

/// A direction `w` with `z_n·w > 0` for every row, found as the
/// minimum-norm point of the convex hull of the rows. `None` when that
/// point is (numerically) the origin.
pub fn separating_direction(z: ArrayView2<'_, f64>) -> Option<Array1<f64>> {
    let n = z.nrows();
    let scale = z.rows().into_iter().map(|r| norm(r)).fold(0.0, f64::max);
    if scale == 0.0 || z.rows().into_iter().any(|r| norm(r) == 0.0) {
        return None;
    }
    let gram = z.dot(&z.t());
    let lip = power_iteration(gram.view(), 1000) * 1.01;
    let mut lam = Array1::from_elem(n, 1.0 / n as f64);
    let mut y = lam.clone();
    let mut t = 1.0f64;
    for _ in 0..SEPARABILITY_MAX_ITER {
        let w = z.t().dot(&lam);
        if z.dot(&w).iter().all(|&m| m > 0.0) {
            return Some(w);
        }
        if norm(w.view()) < 1e-10 * scale {
            return None;
        }
        let grad = gram.dot(&y);
        let next = project_simplex(&(&y - &(grad / lip)));
        if (&y - &next).dot(&(&next - &lam)) > 0.0 {
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &next + &((&next - &lam) * ((t - 1.0) / t_next));
            t = t_next;
        }
        lam = next;
    }
    None
}

fn svm_kkt(z: &Array2<f64>, alpha: &Array1<f64>) -> (Array1<f64>, Array1<f64>, f64) {
    let w = z.t().dot(alpha);
    let margins = z.dot(&w);
    let residual = alpha
        .iter()
        .zip(&margins)
        .map(|(&a, &m)| (a.min(m - 1.0)).abs().max((a * (m - 1.0)).abs()))
        .fold(0.0, f64::max);
    (w, margins, residual)
}

/// Exact solve of the equality system on the current active set.
fn polish(z: &Array2<f64>, q: &Array2<f64>, alpha: &Array1<f64>) -> Option<Array1<f64>> {
    let active: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let sub = q.select(Axis(0), &active).select(Axis(1), &active);
    let sol = least_squares_min_norm(sub.view(), Array1::ones(active.len()).view());
    if sol.iter().any(|&a| a < 0.0 || !a.is_finite()) {
        return None;
    }
    let mut out = Array1::zeros(alpha.len());
    for (&i, &a) in active.iter().zip(&sol) {
        out[i] = a;
    }
    let _ = z;
    Some(out)
}

/// Hard-margin separator through the origin, by accelerated projected
/// gradient on the dual with step `1/λ_max` and an exact polish on the
/// active set.
pub fn hard_margin_svm(task: &BinaryTask) -> Result<SvmSolution> {
    let z = task.signed_points();
    if separating_direction(z.view()).is_none() {
        return Err(Error::NotSeparable);
    }
    let n = z.nrows();
    let q = z.dot(&z.t());
    let lip = power_iteration(q.view(), 1000) * 1.01;
    let mut alpha = Array1::<f64>::zeros(n);
    let mut y = alpha.clone();
    let mut t = 1.0f64;
    let mut best = (alpha.clone(), f64::INFINITY);
    let mut iterations = 0;
    while iterations < SVM_MAX_ITER {
        iterations += 1;
        let grad = q.dot(&y) - 1.0;
        let next = (&y - &(grad / lip)).mapv(|v| v.max(0.0));
        if (&y - &next).dot(&(&next - &alpha)) > 0.0 {
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &next + &((&next - &alpha) * ((t - 1.0) / t_next));
            t = t_next;
        }
        alpha = next;
        if iterations % KKT_CHECK_EVERY == 0 {
            let (_, _, res) = svm_kkt(&z, &alpha);
            if res < best.1 {
                best = (alpha.clone(), res);
            }
            if let Some(p) = polish(&z, &q, &alpha) {
                let (_, _, pres) = svm_kkt(&z, &p);
                if pres < best.1 {
                    best = (p, pres);
                }
            }
            if best.1 < KKT_TOL {
                break;
            }
        }
    }
    let (alpha, kkt_residual) = best;
    if kkt_residual >= KKT_TOL {
        log::warn!("svm stopped at KKT residual {kkt_residual:e}");
    }
    let (w, margins, _) = svm_kkt(&z, &alpha);
    let support_set = (0..n).filter(|&i| (margins[i] - 1.0).abs() < SUPPORT_TOL).collect();
    Ok(SvmSolution {
        objective: w.dot(&w),
        primal: w,
        duals: alpha,
        support_set,
        kkt_residual,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCheckpoint {
    pub m: usize,
    pub cosine: f64,
    /// `‖w_M − w_SVM ln M − w̃‖`.
    pub residual_norm: f64,
    /// `‖w_M / ln M − w_SVM‖`.
    pub scaled_gap: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitBiasReport {
    pub svm: SvmSolution,
    /// Offset solving `η exp(−y_n w̃ᵀx_n) = α_n` on the support set.
    pub w_tilde: Array1<f64>,
    pub checkpoints: Vec<BiasCheckpoint>,
}

/// Least-squares offset on the support vectors with positive duals.
pub fn offset_estimate(task: &BinaryTask, svm: &SvmSolution, eta: f64) -> Array1<f64> {
    let z = task.signed_points();
    let rows: Vec<usize> = svm.support_set.iter().copied().filter(|&i| svm.duals[i] > 0.0).collect();
    if rows.is_empty() {
        return Array1::zeros(task.dim());
    }
    let a = z.select(Axis(0), &rows);
    let b: Array1<f64> = rows.iter().map(|&i| -(svm.duals[i] / eta).ln()).collect();
    least_squares_min_norm(a.view(), b.view())
}

/// Gradient descent from the origin on the unit-scaled task, compared with
/// the max-margin separator at every `M` in `schedule`.
pub fn implicit_bias_check(task: &BinaryTask, eta: f64, schedule: &[usize]) -> Result<ImplicitBiasReport> {
    if schedule.iter().any(|&m| m < 2) {
        return Err(Error::InvalidConfig("schedule entries must be at least 2".into()));
    }
    let task = task.unit_scaled();
    let w0 = Array1::zeros(task.dim());
    let bound = max_stable_eta(&task, w0.view());
    if !(eta < bound) {
        return Err(Error::InvalidConfig(format!("step size {eta} must be below {bound}")));
    }
    let svm = hard_margin_svm(&task)?;
    let w_tilde = offset_estimate(&task, &svm, eta);
    let mut sorted = schedule.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let max_m = *sorted.last().unwrap_or(&0);
    let mut checkpoints = Vec::with_capacity(sorted.len());
    let mut next = 0;
    run_gd(&task, &w0, eta, max_m, |step, w, loss| {
        if next < sorted.len() && sorted[next] == step {
            let ln_m = (step as f64).ln();
            let r = w - &(&svm.primal * ln_m) - &w_tilde;
            checkpoints.push(BiasCheckpoint {
                m: step,
                cosine: cosine(w.view(), svm.primal.view()),
                residual_norm: norm(r.view()),
                scaled_gap: norm((w / ln_m - &svm.primal).view()),
                loss,
            });
            next += 1;
        }
    })?;
    Ok(ImplicitBiasReport {
        svm,
        w_tilde,
        checkpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Exp loss at `w_M` with `tanh` targets.
    pub lhs: f64,
    /// `1 / (M η exp(‖r_M‖))`.
    pub g_theta: f64,
    pub svm_norm_sq: f64,
    pub residual_norm: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn rhs(&self) -> f64 {
        self.g_theta * self.svm_norm_sq
    }
}

/// Compares the exp-loss objective after `m` steps with the margin lower
/// bound `‖w_SVM‖² / (M η e^{‖r_M‖})` for the labeling `sign(θᵀx)`.
pub fn bound_check(theta: &Array1<f64>, points: ArrayView2<'_, f64>, eta: f64, m: usize) -> Result<BoundReport> {
    if m < 10_000 {
        return Err(Error::InvalidConfig(format!("bound check needs at least 10000 steps, got {m}")));
    }
    let task = BinaryTask::with_theta(points.to_owned(), theta.clone())?;
    let report = implicit_bias_check(&task, eta, &[m])?;
    let cp = report.checkpoints[0];
    let g_theta = 1.0 / (m as f64 * eta * cp.residual_norm.exp());
    let svm_norm_sq = report.svm.objective;
    Ok(BoundReport {
        lhs: cp.loss,
        g_theta,
        svm_norm_sq,
        residual_norm: cp.residual_norm,
        holds: cp.loss >= g_theta * svm_norm_sq,
    })
}

/// A separable ±1 labeling and its separator's squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabeling {
    pub labels: Vec<f64>,
    pub norm_sq: f64,
}

/// Every linearly separable labeling up to a global sign flip (the first
/// point is always +1). With `balanced_only`, class sizes differ by at
/// most one.
pub fn separable_labelings(points: ArrayView2<'_, f64>, balanced_only: bool) -> Result<Vec<ScoredLabeling>> {
    let n = points.nrows();
    if n == 0 || n > MAX_ENUMERABLE {
        return Err(Error::InvalidConfig(format!(
            "labeling enumeration needs 1..={MAX_ENUMERABLE} points, got {n}"
        )));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let labels: Vec<f64> = (0..n)
            .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 })
            .collect();
        let pos = labels.iter().filter(|&&l| l > 0.0).count();
        if balanced_only && pos.abs_diff(n - pos) > 1 {
            continue;
        }
        let task = BinaryTask::with_labels(points.to_owned(), &labels)?;
        match hard_margin_svm(&task) {
            Ok(svm) => out.push(ScoredLabeling {
                labels,
                norm_sq: svm.objective,
            }),
            Err(Error::NotSeparable) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Labelings attaining the smallest separator norm (within `1e-6`
/// relative), in enumeration order.
pub fn min_norm_labelings(scored: &[ScoredLabeling]) -> Vec<ScoredLabeling> {
    let best = scored.iter().map(|s| s.norm_sq).fold(f64::INFINITY, f64::min);
    scored
        .iter()
        .filter(|s| s.norm_sq <= best * (1.0 + 1e-6))
        .cloned()
        .collect()
}

/// Brute-force maximum-margin balanced labeling. Returns every tied
/// optimum.
pub fn margin_search_smoke(points: ArrayView2<'_, f64>) -> Result<Vec<ScoredLabeling>> {
    if points.nrows() > 10 {
        return Err(Error::InvalidConfig("margin search is limited to 10 points".into()));
    }
    let scored = separable_labelings(points, true)?;
    if scored.is_empty() {
        return Err(Error::NoSeparableLabeling);
    }
    Ok(min_norm_labelings(&scored))
}

/// `n` points drawn uniformly from the unit ball in `d` dimensions.
pub fn unit_ball_cloud(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    let mut rows = Vec::with_capacity(n * d);
    while rows.len() < n * d {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            rows.extend(p);
        }
    }
    Array2::from_shape_vec((n, d), rows).expect("shape matches")
}

/// `count` standard-normal vectors in `d` dimensions.
pub fn gaussian_directions(count: usize, d: usize, seed: u64) -> Vec<Array1<f64>> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Explicitly labeled task separable through the origin: points from the
/// unit ball kept only if their distance to a random hyperplane exceeds
/// `min_gap`, labeled by the side they fall on.
pub fn random_separable_task(n: usize, d: usize, min_gap: f64, seed: u64) -> BinaryTask {
    let theta = &gaussian_directions(1, d, derive_seed(seed, 0))[0];
    let unit = theta / norm(theta.view());
    let mut kept = Vec::with_capacity(n * d);
    let mut batch = 0;
    while kept.len() < n * d {
        let cloud = unit_ball_cloud(4 * n, d, derive_seed(seed, 1 + batch));
        batch += 1;
        for row in cloud.rows() {
            if kept.len() < n * d && row.dot(&unit).abs() > min_gap {
                kept.extend(row.iter().copied());
            }
        }
    }
    let x = Array2::from_shape_vec((n, d), kept).expect("shape matches");
    let labels = x.dot(&unit).mapv(f64::signum).to_vec();
    BinaryTask::with_labels(x, &labels).expect("labels are signs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(xs: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap()
    }

    fn random_task(seed: u64, n: usize, d: usize) -> BinaryTask {
        random_separable_task(n, d, 0.05, seed)
    }

    #[test]
    fn task_validation() {
        assert!(BinaryTask::with_labels(line(&[1.0]), &[0.5]).is_err());
        assert!(BinaryTask::with_labels(line(&[1.0]), &[1.0, 1.0]).is_err());
        assert!(BinaryTask::with_theta(line(&[1.0]), array![0.0]).is_err());
        assert!(matches!(
            BinaryTask::with_theta(array![[1.0, 1.0]], array![1.0, -1.0]),
            Err(Error::NotSeparable)
        ));
        let t = BinaryTask::with_theta(array![[2.0, 0.0], [0.0, -1.0]], array![1.0, 1.0]).unwrap();
        assert_eq!(t.signs(), array![1.0, -1.0]);
        assert!((t.targets()[0] - 2f64.tanh()).abs() < 1e-15);
        assert!((t.unit_scaled().max_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gd_on_symmetric_pair() {
        let task = BinaryTask::with_labels(line(&[-1.0, 1.0]), &[-1.0, 1.0]).unwrap();
        let tr = exp_loss_gd(&task, &array![0.0], 0.25, 50).unwrap();
        assert_eq!(tr.losses[0], 2.0);
        assert!(tr.iterates[1][0] > 0.0);
        for w in tr.losses.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert_eq!(tr.iterates.len(), 51);
    }

    #[test]
    fn gd_loss_is_monotone_on_random_tasks() {
        for seed in 0..10 {
            let task = random_task(seed, 10, 3).unit_scaled();
            let eta = 0.9 * max_stable_eta(&task, array![0.0, 0.0, 0.0].view());
            let tr = exp_loss_gd(&task, &Array1::zeros(3), eta, 2000).unwrap();
            for w in tr.losses.windows(2) {
                assert!(w[1] <= w[0], "seed {seed}");
            }
        }
    }

    #[test]
    fn gd_norm_keeps_growing() {
        let task = random_task(3, 8, 2).unit_scaled();
        let eta = 0.5 / 8.0;
        let tr = exp_loss_gd(&task, &Array1::zeros(2), eta, 20_000).unwrap();
        let n = |m: usize| norm(tr.iterates[m].view());
        assert!(n(2000) > n(1000));
        assert!(n(20_000) > n(10_000));
    }

    #[test]
    fn gd_divergence_is_reported() {
        // non-separable pair, huge step
        let task = BinaryTask::with_labels(line(&[-1.0, 1.0]), &[1.0, 1.0]).unwrap();
        let err = exp_loss_gd(&task, &array![0.1], 50.0, 100).unwrap_err();
        assert!(matches!(err, Error::DivergenceDetected { consecutive: 10, .. }), "{err:?}");
    }

    #[test]
    fn svm_analytic_line() {
        let s = hard_margin_svm(&BinaryTask::with_labels(line(&[-1.0, 1.0]), &[-1.0, 1.0]).unwrap()).unwrap();
        assert!((s.primal[0] - 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert_eq!(s.support_set, vec![0, 1]);
        let s = hard_margin_svm(&BinaryTask::with_labels(line(&[-2.0, 2.0]), &[-1.0, 1.0]).unwrap()).unwrap();
        assert!((s.primal[0] - 0.5).abs() < 1e-9);
        assert!((s.objective - 0.25).abs() < 1e-9);
    }

    #[test]
    fn interior_point_gets_zero_dual() {
        let base = hard_margin_svm(&BinaryTask::with_labels(line(&[-1.0, 1.0]), &[-1.0, 1.0]).unwrap()).unwrap();
        let s = hard_margin_svm(&BinaryTask::with_labels(line(&[-1.0, 1.0, 7.0]), &[-1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((s.primal[0] - base.primal[0]).abs() < 1e-9);
        assert_eq!(s.duals[2], 0.0);
        assert_eq!(s.support_set, vec![0, 1]);
    }

    #[test]
    fn svm_rejects_inseparable() {
        let t = BinaryTask::with_labels(line(&[-1.0, 1.0]), &[1.0, 1.0]).unwrap();
        assert!(matches!(hard_margin_svm(&t), Err(Error::NotSeparable)));
        let t = BinaryTask::with_labels(array![[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], &[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(hard_margin_svm(&t), Err(Error::NotSeparable)));
    }

    #[test]
    fn svm_invariants_on_random_tasks() {
        for seed in 0..20 {
            let task = random_task(100 + seed, 20, 2 + (seed as usize % 4));
            let s = hard_margin_svm(&task).unwrap();
            assert!(s.kkt_residual < KKT_TOL, "seed {seed}: {}", s.kkt_residual);
            let z = task.signed_points();
            let margins = z.dot(&s.primal);
            for (a, m) in s.duals.iter().zip(&margins) {
                assert!(*a >= 0.0);
                assert!(*m >= 1.0 - 1e-6);
                assert!((a * (m - 1.0)).abs() < 1e-6);
            }
            let recon = z.t().dot(&s.duals);
            assert!(norm((&recon - &s.primal).view()) < 1e-6);
            // scale covariance
            let scaled = hard_margin_svm(&task.scaled(3.0)).unwrap();
            assert!((scaled.objective * 9.0 / s.objective - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn implicit_bias_converges_in_direction() {
        let task = random_task(0, 10, 2);
        let r = implicit_bias_check(&task, 0.99 / 10.0, &[100, 1000, 10_000, 100_000]).unwrap();
        let cp = &r.checkpoints;
        assert!(cp[3].cosine >= 0.999, "{cp:?}");
        for w in cp.windows(2) {
            assert!(w[1].residual_norm < w[0].residual_norm, "{cp:?}");
            assert!(w[1].scaled_gap < w[0].scaled_gap, "{cp:?}");
            assert!(w[1].loss < w[0].loss);
        }
    }

    #[test]
    fn implicit_bias_rejects_large_steps() {
        let task = random_task(1, 10, 2);
        assert!(implicit_bias_check(&task, 0.2, &[100]).is_err());
    }

    #[test]
    fn bound_holds_and_is_sign_invariant() {
        let task = random_task(11, 12, 2);
        let theta = array![0.3, -1.1];
        let r = bound_check(&theta, task.points(), 0.5 / 12.0, 10_000).unwrap();
        assert!(r.holds, "{r:?}");
        assert!((r.rhs() - r.g_theta * r.svm_norm_sq).abs() < 1e-15);
        let r2 = bound_check(&(&theta * 4.0), task.points(), 0.5 / 12.0, 10_000).unwrap();
        assert!((r2.svm_norm_sq - r.svm_norm_sq).abs() < 1e-9);
        assert!(bound_check(&theta, task.points(), 0.5 / 12.0, 100).is_err());
    }

    #[test]
    fn margin_search_geometry() {
        // two tight pairs far apart, on a line off the origin
        let p = array![[0.0, 1.0], [0.1, 1.0], [3.0, 1.0], [3.1, 1.0]];
        let best = margin_search_smoke(p.view()).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].labels, vec![1.0, 1.0, -1.0, -1.0]);

        let sq = array![[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]];
        let best = margin_search_smoke(sq.view()).unwrap();
        assert_eq!(best.len(), 2);

        let xs = [0.0, 1.0, 2.0, 4.0, 5.0, 6.0];
        let p = Array2::from_shape_fn((6, 2), |(i, j)| if j == 0 { xs[i] } else { 1.0 });
        let best = margin_search_smoke(p.view()).unwrap();
        assert_eq!(best[0].labels, vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn margin_search_without_separable_labeling() {
        let p = array![[1.0], [2.0], [3.0], [4.0]];
        assert!(matches!(margin_search_smoke(p.view()), Err(Error::NoSeparableLabeling)));
    }
}
