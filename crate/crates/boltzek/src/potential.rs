//! Potentials `V: R^d -> R` (d = 1, 2) with derivatives and a computational window.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Window<T: Real> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> Window<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn interval(lo: T, hi: T) -> Self {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Length of the diagonal.
    pub fn size(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| (b - a) * (b - a))
            .fold(T::zero(), |s, x| s + x)
            .sqrt()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&a, &b))| xi >= a && xi <= b)
    }
}

pub trait Potential<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn grad(&self, x: &[T]) -> DVector<T>;
    fn hess(&self, x: &[T]) -> DMatrix<T>;
    fn window(&self) -> &Window<T>;
}

/// Polynomial in one variable, coefficients in increasing degree.
#[derive(Clone, Debug)]
pub struct Poly1<T: Real> {
    pub coeffs: Vec<T>,
    pub window: Window<T>,
}

impl<T: Real> Poly1<T> {
    pub fn new(coeffs: Vec<T>, lo: T, hi: T) -> Self {
        Self { coeffs, window: Window::interval(lo, hi) }
    }

    fn horner(c: &[T], x: T) -> T {
        c.iter().rev().fold(T::zero(), |acc, &a| acc * x + a)
    }

    fn derivative_coeffs(c: &[T]) -> Vec<T> {
        c.iter().enumerate().skip(1).map(|(k, &a)| a * T::c(k as f64)).collect()
    }

    pub fn v(&self, x: T) -> T {
        Self::horner(&self.coeffs, x)
    }

    pub fn dv(&self, x: T) -> T {
        Self::horner(&Self::derivative_coeffs(&self.coeffs), x)
    }

    pub fn d2v(&self, x: T) -> T {
        let d1 = Self::derivative_coeffs(&self.coeffs);
        Self::horner(&Self::derivative_coeffs(&d1), x)
    }

    pub fn with_window(mut self, lo: T, hi: T) -> Self {
        self.window = Window::interval(lo, hi);
        self
    }

    /// `V + c`.
    pub fn shifted(&self, c: T) -> Self {
        let mut p = self.clone();
        if p.coeffs.is_empty() {
            p.coeffs.push(T::zero());
        }
        p.coeffs[0] += c;
        p
    }
}

impl<T: Real> Potential<T> for Poly1<T> {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[T]) -> T {
        self.v(x[0])
    }
    fn grad(&self, x: &[T]) -> DVector<T> {
        DVector::from_element(1, self.dv(x[0]))
    }
    fn hess(&self, x: &[T]) -> DMatrix<T> {
        DMatrix::from_element(1, 1, self.d2v(x[0]))
    }
    fn window(&self) -> &Window<T> {
        &self.window
    }
}

/// Polynomial in two variables: sum of `c * x^i * y^j` terms.
#[derive(Clone, Debug)]
pub struct Poly2<T: Real> {
    pub terms: Vec<(u32, u32, T)>,
    pub window: Window<T>,
}

impl<T: Real> Poly2<T> {
    pub fn new(terms: Vec<(u32, u32, T)>, window: Window<T>) -> Self {
        assert_eq!(window.dim(), 2);
        Self { terms, window }
    }

    fn pw(x: T, k: u32) -> T {
        (0..k).fold(T::one(), |p, _| p * x)
    }

    // d-th derivative of x^k
    fn dpow(x: T, k: u32, d: u32) -> T {
        if d > k {
            return T::zero();
        }
        let f = (0..d).fold(1.0, |f, i| f * (k - i) as f64);
        T::c(f) * Self::pw(x, k - d)
    }

    fn eval_d(&self, x: &[T], dx: u32, dy: u32) -> T {
        self.terms.iter().fold(T::zero(), |s, &(i, j, c)| {
            s + c * Self::dpow(x[0], i, dx) * Self::dpow(x[1], j, dy)
        })
    }

    pub fn shifted(&self, c: T) -> Self {
        let mut p = self.clone();
        p.terms.push((0, 0, c));
        p
    }
}

impl<T: Real> Potential<T> for Poly2<T> {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[T]) -> T {
        self.eval_d(x, 0, 0)
    }
    fn grad(&self, x: &[T]) -> DVector<T> {
        DVector::from_vec(vec![self.eval_d(x, 1, 0), self.eval_d(x, 0, 1)])
    }
    fn hess(&self, x: &[T]) -> DMatrix<T> {
        let xy = self.eval_d(x, 1, 1);
        DMatrix::from_row_slice(2, 2, &[self.eval_d(x, 2, 0), xy, xy, self.eval_d(x, 0, 2)])
    }
    fn window(&self) -> &Window<T> {
        &self.window
    }
}

fn poly<T: Real>(c: &[f64], lo: f64, hi: f64) -> Poly1<T> {
    Poly1::new(c.iter().map(|&a| T::c(a)).collect(), T::c(lo), T::c(hi))
}

/// `(x^2-1)^2/4` on `[-3, 3]`.
pub fn double_well<T: Real>() -> Poly1<T> {
    poly(&[0.25, 0.0, -0.5, 0.0, 0.25], -3.0, 3.0)
}

/// `(x^2-1)^2/4 + x/10` on `[-3, 3]`.
pub fn tilted_double_well<T: Real>() -> Poly1<T> {
    poly(&[0.25, 0.1, -0.5, 0.0, 0.25], -3.0, 3.0)
}

/// Sextic with three wells of distinct depths on `[-2.7, 2.8]`.
pub fn triple_well<T: Real>() -> Poly1<T> {
    poly(&[0.0, -0.956, 1.64, 0.556, -0.854, -0.071, 0.108], -2.7, 2.8)
}

/// `(x^2-1)^2/4 + x/10 + y^2/2 + x^2 y^2/4` on `[-2, 2] x [-1.5, 1.5]`.
pub fn tilted_double_well_2d<T: Real>() -> Poly2<T> {
    let t = |i, j, c: f64| (i, j, T::c(c));
    Poly2::new(
        vec![t(0, 0, 0.25), t(1, 0, 0.1), t(2, 0, -0.5), t(4, 0, 0.25), t(0, 2, 0.5), t(2, 2, 0.25)],
        Window::new(vec![T::c(-2.0), T::c(-1.5)], vec![T::c(2.0), T::c(1.5)]),
    )
}

pub fn builtin<T: Real>(name: &str) -> Result<Poly1<T>> {
    match name {
        "double_well" => Ok(double_well()),
        "tilted_double_well" => Ok(tilted_double_well()),
        "triple_well" => Ok(triple_well()),
        other => Err(Error::InvalidInput(format!("unknown builtin potential '{other}'"))),
    }
}

/// Outcome of [`validate_potential`].
#[derive(Clone, Debug)]
pub struct PotentialReport {
    pub max_grad_error: f64,
    pub max_hess_error: f64,
    pub max_hess_asymmetry: f64,
    pub min_boundary_grad: f64,
}

impl PotentialReport {
    pub fn ok(&self, grad_floor: f64) -> bool {
        self.max_grad_error <= 1e-6
            && self.max_hess_error <= 1e-5
            && self.max_hess_asymmetry == 0.0
            && self.min_boundary_grad >= grad_floor
    }
}

/// Checks derivatives against centred differences at random window points and
/// measures the gradient on the window boundary.
pub fn validate_potential(p: &dyn Potential<f64>, samples: usize, seed: u64) -> PotentialReport {
    let d = p.dim();
    let w = p.window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-5 * w.size().max(1.0);
    let mut ge: f64 = 0.0;
    let mut he: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|i| rng.random_range(w.lo[i]..w.hi[i])).collect();
        let g = p.grad(&x);
        let hm = p.hess(&x);
        asym = asym.max((&hm - hm.transpose()).amax());
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * step);
            ge = ge.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
            let dg = (p.grad(&xp) - p.grad(&xm)) / (2.0 * step);
            for j in 0..d {
                he = he.max((dg[j] - hm[(j, i)]).abs() / (1.0 + hm[(j, i)].abs()));
            }
        }
    }
    let n = 64;
    let mut bmin = f64::INFINITY;
    for axis in 0..d {
        for side in [w.lo[axis], w.hi[axis]] {
            let count = if d == 1 { 1 } else { n };
            for k in 0..count {
                let mut x = vec![0.0; d];
                x[axis] = side;
                if d > 1 {
                    let o = (axis + 1) % d;
                    x[o] = w.lo[o] + (w.hi[o] - w.lo[o]) * k as f64 / (n - 1) as f64;
                }
                bmin = bmin.min(p.grad(&x).norm());
            }
        }
    }
    PotentialReport { max_grad_error: ge, max_hess_error: he, max_hess_asymmetry: asym, min_boundary_grad: bmin }
}
