//! Small dense helpers for the f x f normal equations.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Adds `alpha * x xᵀ` to the row-major n x n matrix `a`.
#[inline]
pub(crate) fn add_outer(alpha: f64, x: &[f64], a: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let s = alpha * x[i];
        axpy(s, x, &mut a[i * n..(i + 1) * n]);
    }
}

/// `YᵀY` for a row-major `rows x cols` matrix.
pub(crate) fn gram(data: &[f64], cols: usize) -> Vec<f64> {
    let mut g = vec![0.0; cols * cols];
    for row in data.chunks_exact(cols) {
        add_outer(1.0, row, &mut g);
    }
    g
}

/// Solves `a x = b` in place for symmetric positive definite `a` (row-major
/// n x n) by Cholesky factorization. On return `b` holds `x`; `a` is
/// overwritten by its factor.
pub fn cholesky_solve(a: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tol = scale * n as f64 * f64::EPSILON;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= tol {
            return Err(Error::IllConditioned {
                column: j,
                pivot: d,
            });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // L y = b
    for i in 0..n {
        let s = b[i] - dot(&a[i * n..i * n + i], &b[..i]);
        b[i] = s / a[i * n + i];
    }
    // Lᵀ x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}
