//! First-order update rules shared by the inner and outer loops.

use std::collections::VecDeque;

use ndarray::{Array, Array1, Dimension, Zip};

use crate::scalar::Scalar;

/// Adam constants. Defaults are the ones published with the method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

/// Moment accumulators for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T, D: Dimension> {
    pub first_moment: Array<T, D>,
    pub second_moment: Array<T, D>,
    pub step_count: u64,
}

impl<T: Scalar, D: Dimension> AdamState<T, D> {
    pub fn zeros(shape: D) -> Self {
        Self {
            first_moment: Array::zeros(shape.clone()),
            second_moment: Array::zeros(shape),
            step_count: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update(&mut self, params: &mut Array<T, D>, grad: &Array<T, D>, lr: T, cfg: &AdamConfig<T>) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let one = T::one();
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        Zip::from(params)
            .and(&mut self.first_moment)
            .and(&mut self.second_moment)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + cfg.eps);
            });
    }
}

/// Plain gradient step `params -= lr * grad`.
pub fn gd_update<T: Scalar, D: Dimension>(params: &mut Array<T, D>, grad: &Array<T, D>, lr: T) {
    params.zip_mut_with(grad, |p, &g| *p = *p - lr * g);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop once the largest gradient component is below this.
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            memory: 10,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult<T> {
    pub x: Array1<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn dot1<T: Scalar>(a: &Array1<T>, b: &Array1<T>) -> T {
    a.dot(b)
}

/// Limited-memory BFGS with Armijo backtracking. `f` returns the value and
/// gradient at a point.
pub fn lbfgs<T: Scalar, F>(mut f: F, x0: Array1<T>, cfg: &LbfgsConfig) -> LbfgsResult<T>
where
    F: FnMut(&Array1<T>) -> (T, Array1<T>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut hist: VecDeque<(Array1<T>, Array1<T>, T)> = VecDeque::new();
    let tol = T::lit(cfg.grad_tol);
    let c1 = T::lit(1e-4);
    let half = T::lit(0.5);
    for iter in 0..cfg.max_iter {
        if g.iter().all(|v| v.abs() < tol) {
            return LbfgsResult { x, value: fx, iterations: iter, converged: true };
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = *rho * dot1(s, &q);
            q.zip_mut_with(y, |qi, &yi| *qi = *qi - a * yi);
            alphas.push(a);
        }
        let scale = match hist.back() {
            Some((s, y, _)) => dot1(s, y) / dot1(y, y),
            None => T::one() / g.iter().fold(T::one(), |m, v| m.max(v.abs())),
        };
        q.mapv_inplace(|v| v * scale);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = *rho * dot1(y, &q);
            q.zip_mut_with(s, |qi, &si| *qi = *qi + (*a - b) * si);
        }
        let mut dir = q.mapv(|v| -v);
        let mut slope = dot1(&g, &dir);
        if !(slope < T::zero()) {
            hist.clear();
            dir = g.mapv(|v| -v);
            slope = dot1(&g, &dir);
        }
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir.mapv(|v| v * t);
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + c1 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t = t * half;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return LbfgsResult { x, value: fx, iterations: iter, converged: false };
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = dot1(&s, &y);
        if sy > T::lit(1e-12) * dot1(&s, &s).sqrt() * dot1(&y, &y).sqrt() && sy > T::zero() {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, T::one() / sy));
        }
        let stalled = (fx - f_new).abs() <= T::epsilon() * fx.abs().max(T::one());
        x = x_new;
        fx = f_new;
        g = g_new;
        if stalled {
            let converged = g.iter().all(|v| v.abs() < tol);
            return LbfgsResult { x, value: fx, iterations: iter + 1, converged };
        }
    }
    let converged = g.iter().all(|v| v.abs() < tol);
    LbfgsResult { x, value: fx, iterations: cfg.max_iter, converged }
}
