//! Gauss rules and the two-dimensional Laplace-method check.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use std::f64::consts::PI;

/// Golub-Welsch for a symmetric tridiagonal Jacobi matrix with zero diagonal.
fn golub_welsch(off: &[f64], mass: f64) -> (Vec<f64>, Vec<f64>) {
    let n = off.len() + 1;
    let mut j = DMatrix::zeros(n, n);
    for (k, &b) in off.iter().enumerate() {
        j[(k, k + 1)] = b;
        j[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], mass * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // symmetrize against rounding
    for i in 0..n / 2 {
        let (a, b) = (pairs[i], pairs[n - 1 - i]);
        let x = 0.5 * (b.0 - a.0);
        let w = 0.5 * (a.1 + b.1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Probabilists' Gauss-Hermite rule: `E[f(Z)], Z ~ N(0,1)` is `sum w_i f(x_i)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let (x, _) = golub_welsch(&off, 1.0);
    // Christoffel weights keep relative accuracy in the tails
    let w = x.iter().map(|&xi| 1.0 / hermite_normalized(n, xi).iter().map(|p| p * p).sum::<f64>()).collect();
    (x, w)
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&off, 2.0)
}

/// `He_n(x) / sqrt(n!)` for `n < levels`.
pub fn hermite_normalized(levels: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; levels];
    if levels == 0 {
        return p;
    }
    p[0] = 1.0;
    if levels > 1 {
        p[1] = x;
    }
    for k in 1..levels.saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = (x * p[k] - kf.sqrt() * p[k - 1]) / (kf + 1.0).sqrt();
    }
    p
}

#[derive(Clone, Debug)]
pub struct LaplaceRow {
    pub h: f64,
    /// `det(H)^{1/2} (2 pi h)^{-1} int a e^{-(phi - phi(x0))/h}`.
    pub ratio: f64,
    /// `ratio - a(x0)`.
    pub error: f64,
    pub error_over_h: f64,
}

/// Trapezoid evaluation of the normalized Laplace integral over the box
/// `x0 +- half_width sqrt(h)`, `n` points per axis.
pub fn laplace_ratio<P, A>(phi: &P, a: &A, x0: [f64; 2], hess: Matrix2<f64>, h: f64, half_width: f64, n: usize) -> f64
where
    P: Fn(f64, f64) -> f64,
    A: Fn(f64, f64) -> f64,
{
    let r = half_width * h.sqrt();
    let step = 2.0 * r / (n - 1) as f64;
    let phi0 = phi(x0[0], x0[1]);
    let mut s = 0.0;
    for i in 0..n {
        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let x = x0[0] - r + i as f64 * step;
        for j in 0..n {
            let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let y = x0[1] - r + j as f64 * step;
            s += wi * wj * a(x, y) * (-(phi(x, y) - phi0) / h).exp();
        }
    }
    hess.determinant().sqrt() / (2.0 * PI * h) * s * step * step
}

/// Laplace-method table over `h_list` (box `x0 +- 12 sqrt(h)`, 401 points per axis).
pub fn laplace_check<P, A>(phi: &P, a: &A, x0: [f64; 2], hess: Matrix2<f64>, h_list: &[f64]) -> Vec<LaplaceRow>
where
    P: Fn(f64, f64) -> f64 + Sync,
    A: Fn(f64, f64) -> f64 + Sync,
{
    let a0 = a(x0[0], x0[1]);
    h_list
        .iter()
        .map(|&h| {
            let ratio = laplace_ratio(phi, a, x0, hess, h, 12.0, 401);
            let error = ratio - a0;
            LaplaceRow { h, ratio, error, error_over_h: error / h }
        })
        .collect()
}

/// `max / min` of `|error / h|` across the table.
pub fn constant_spread(rows: &[LaplaceRow]) -> f64 {
    let c: Vec<f64> = rows.iter().map(|r| r.error_over_h.abs()).collect();
    let hi = c.iter().copied().fold(0.0, f64::max);
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}
