//! Small dense helpers that ndarray does not provide directly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::scalar::Scalar;

/// Row-wise softmax with the usual max shift.
pub fn softmax_rows<T: Scalar>(logits: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(T::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}

/// Row-wise log-softmax computed through log-sum-exp.
pub fn log_softmax_rows<T: Scalar>(logits: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(T::neg_infinity(), |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

pub fn dot<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.dot(&b)
}

pub fn norm<T: Scalar>(a: ArrayView1<'_, T>) -> T {
    a.dot(&a).sqrt()
}

pub fn cosine<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    let denom = norm(a) * norm(b);
    if denom == T::zero() {
        T::zero()
    } else {
        a.dot(&b) / denom
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed all-ones start.
pub fn power_iteration<T: Scalar>(m: ArrayView2<'_, T>, iters: usize) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::zero();
    }
    let mut v = Array1::from_elem(n, T::one() / T::from_count(n).sqrt());
    let mut lambda = T::zero();
    for _ in 0..iters {
        let w = m.dot(&v);
        let nw = norm(w.view());
        if nw == T::zero() {
            return T::zero();
        }
        lambda = v.dot(&w);
        v = w / nw;
    }
    lambda.max(T::zero())
}

/// Largest eigenvalue of `xᵀx / n` for a data matrix `x` (rows are samples).
pub fn gram_spectral_radius<T: Scalar>(x: ArrayView2<'_, T>) -> T {
    let n = T::from_count(x.nrows().max(1));
    let cov = x.t().dot(&x) / n;
    power_iteration(cov.view(), 500)
}

/// Solves a square system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tol` relative to the largest
/// absolute entry.
pub fn solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>, tol: T) -> Option<Array1<T>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.to_owned();
    let mut rhs = b.to_owned();
    let scale = m.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    if scale == T::zero() {
        return if n == 0 { Some(rhs) } else { None };
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().partial_cmp(&m[[j, col]].abs()).unwrap())
            .unwrap();
        if m[[pivot, col]].abs() <= tol * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap([pivot, k], [col, k]);
            }
            rhs.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = m[[row, col]] / m[[col, col]];
            if f != T::zero() {
                for k in col..n {
                    let v = m[[col, k]];
                    m[[row, k]] = m[[row, k]] - f * v;
                }
                let v = rhs[col];
                rhs[row] = rhs[row] - f * v;
            }
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = acc - m[[row, k]] * x[k];
        }
        x[row] = acc / m[[row, row]];
    }
    Some(x)
}

/// Minimum-norm solution of the underdetermined (or square) system `a x = b`
/// through the normal equations `a aᵀ y = b`, `x = aᵀ y`.
pub fn min_norm_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>) -> Option<Array1<T>> {
    let gram = a.dot(&a.t());
    let y = solve(gram.view(), b, T::lit(1e-12))?;
    Some(a.t().dot(&y))
}

/// Least-squares solution of `a x = b` with the smallest norm, approximated
/// by a vanishing ridge term so rank-deficient and inconsistent systems both
/// have an answer.
pub fn least_squares_min_norm<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>) -> Array1<T> {
    let q = a.ncols();
    let mut normal = a.t().dot(&a);
    let scale = (0..q).map(|i| normal[[i, i]]).fold(T::zero(), |m, v| m.max(v));
    let ridge = T::lit(1e-13) * scale.max(T::tiny());
    for i in 0..q {
        normal[[i, i]] = normal[[i, i]] + ridge;
    }
    let rhs = a.t().dot(&b);
    solve(normal.view(), rhs.view(), T::zero()).unwrap_or_else(|| Array1::zeros(q))
}

/// Mean of each column.
pub fn column_means<T: Scalar>(x: ArrayView2<'_, T>) -> Array1<T> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}
