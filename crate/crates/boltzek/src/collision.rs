//! Collision operators `Q_h = rho(H_0)` diagonal in the scaled Hermite basis, and
//! the constant-matrix form used for prefactors.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, SymmetricEigen};
use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
pub enum Rate<T: Real> {
    /// `a t / (1 + t)`.
    MildRelaxation { scale: T },
    /// `a t`.
    Linear { scale: T },
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> fmt::Debug for Rate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::MildRelaxation { scale } => write!(f, "MildRelaxation({scale})"),
            Rate::Linear { scale } => write!(f, "Linear({scale})"),
            Rate::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Scalar rate function `rho: R+ -> R+`.
#[derive(Clone, Debug)]
pub struct RateFunction<T: Real> {
    pub rate: Rate<T>,
    pub rho_prime0: T,
    pub rho_inf: Option<T>,
}

impl<T: Real> RateFunction<T> {
    pub fn mild_relaxation() -> Self {
        Self::mild_relaxation_scaled(T::one())
    }

    pub fn mild_relaxation_scaled(scale: T) -> Self {
        Self { rate: Rate::MildRelaxation { scale }, rho_prime0: scale, rho_inf: Some(scale) }
    }

    pub fn linear() -> Self {
        Self::linear_scaled(T::one())
    }

    pub fn linear_scaled(scale: T) -> Self {
        Self { rate: Rate::Linear { scale }, rho_prime0: scale, rho_inf: None }
    }

    /// Arbitrary rate; `rho'(0)` by Richardson extrapolation of `rho(e)/e`.
    pub fn custom(f: Arc<dyn Fn(T) -> T + Send + Sync>) -> Self {
        let rho_prime0 = Self::extrapolated_slope(&*f);
        let far = f(T::c(1e8));
        let rho_inf = (far.abs() < T::c(1e6)).then_some(far);
        Self { rate: Rate::Custom(f), rho_prime0, rho_inf }
    }

    /// `(rho(e) - rho(0)) / e` extrapolated to `e -> 0`.
    pub fn extrapolated_slope(f: &dyn Fn(T) -> T) -> T {
        let d = |e: T| (f(e) - f(T::zero())) / e;
        let e = T::c(1e-3);
        let (d1, d2, d4) = (d(e), d(e / T::c(2.0)), d(e / T::c(4.0)));
        // two Richardson levels, error O(e^3)
        let r1 = d2 * T::c(2.0) - d1;
        let r2 = d4 * T::c(2.0) - d2;
        (r2 * T::c(4.0) - r1) / T::c(3.0)
    }

    pub fn rho(&self, t: T) -> T {
        match &self.rate {
            Rate::MildRelaxation { scale } => *scale * t / (T::one() + t),
            Rate::Linear { scale } => *scale * t,
            Rate::Custom(f) => f(t),
        }
    }

    /// `rho(t) >= t / (C (1 + t))` on `[0, 100]`; returns the worst margin.
    pub fn lower_bound_margin(&self, c: T, samples: usize) -> T {
        (0..=samples)
            .map(|i| {
                let t = T::c(100.0 * i as f64 / samples as f64);
                self.rho(t) - t / (c * (T::one() + t))
            })
            .fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m })
    }
}

#[derive(Clone, Debug)]
pub enum CollisionKind<T: Real> {
    Bgk(RateFunction<T>),
    /// Symmetric positive-definite `M_0`.
    ConstantMatrix(DMatrix<T>),
}

#[derive(Clone, Debug)]
pub struct CollisionModel<T: Real> {
    pub kind: CollisionKind<T>,
    pub dim: usize,
}

impl<T: Real> CollisionModel<T> {
    pub fn bgk(rate: RateFunction<T>, dim: usize) -> Self {
        Self { kind: CollisionKind::Bgk(rate), dim }
    }

    pub fn constant_matrix(m0: DMatrix<T>) -> Result<Self> {
        if !m0.is_square() {
            return Err(Error::InvalidInput("M0 must be square".into()));
        }
        if (&m0 - m0.transpose()).amax() > T::tol(1e-12) * (T::one() + m0.amax()) {
            return Err(Error::InvalidInput("M0 must be symmetric".into()));
        }
        let dim = m0.nrows();
        Ok(Self { kind: CollisionKind::ConstantMatrix(m0), dim })
    }

    pub fn mild_relaxation(dim: usize) -> Self {
        Self::bgk(RateFunction::mild_relaxation(), dim)
    }

    /// Smallest eigenvalue of `M_0(s, 0, 0)`.
    pub fn m0_floor(&self) -> T {
        SymmetricEigen::new(m0_at_rest(self)).eigenvalues.min()
    }

    /// `M_0(s,0,0) >= 1/C`.
    pub fn is_valid(&self, c: T) -> bool {
        self.m0_floor() >= T::one() / c
    }

    /// Eigenvalue of `Q_h` on the Hermite level with total degree `level`.
    pub fn q_level(&self, h: T, level: usize) -> Result<T> {
        let t = h * T::c(level as f64);
        match &self.kind {
            CollisionKind::Bgk(r) => Ok(if level == 0 { T::zero() } else { r.rho(t) }),
            CollisionKind::ConstantMatrix(m) if self.dim == 1 => Ok(m[(0, 0)] * t),
            CollisionKind::ConstantMatrix(_) => Err(Error::MatrixKindUnsupported { dim: self.dim }),
        }
    }
}

/// `M_0` at `(v, eta) = (0, 0)`: `rho'(0) Id` for BGK, the stored matrix otherwise.
pub fn m0_at_rest<T: Real>(model: &CollisionModel<T>) -> DMatrix<T> {
    match &model.kind {
        CollisionKind::Bgk(r) => DMatrix::identity(model.dim, model.dim) * r.rho_prime0,
        CollisionKind::ConstantMatrix(m) => m.clone(),
    }
}

/// `rho(h n)` for `n = 0..=max_level` (d = 1 levels, or total degree `|n|`).
pub fn q_hermite_diagonal<T: Real>(model: &CollisionModel<T>, h: T, max_level: usize) -> Result<Vec<T>> {
    if h <= T::zero() {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    (0..=max_level).map(|n| model.q_level(h, n)).collect()
}

/// `rho(h |n|)` for a multi-index.
pub fn q_entry<T: Real>(model: &CollisionModel<T>, h: T, n: &[usize]) -> Result<T> {
    model.q_level(h, n.iter().sum())
}

/// Ladder operators `(b, b*)` on levels `0..=max_level`:
/// `b psi_n = sqrt(h n) psi_{n-1}`, `b* psi_n = sqrt(h (n+1)) psi_{n+1}`.
pub fn ladder_matrices<T: Real>(h: T, max_level: usize) -> Result<(DMatrix<T>, DMatrix<T>)> {
    if max_level < 2 {
        return Err(Error::InvalidInput("max_level must be at least 2".into()));
    }
    let n = max_level + 1;
    let mut b = DMatrix::zeros(n, n);
    for k in 1..n {
        b[(k - 1, k)] = (h * T::c(k as f64)).sqrt();
    }
    let bs = b.transpose();
    Ok((b, bs))
}

/// Checks `rho(h|n|) >= h|n| / (C (1 + h|n|))` and `rho(h|n|) >= h / C` for
/// `1 <= |n| <= max_level`. Returns the offending level if any.
pub fn coercivity_violation<T: Real>(model: &CollisionModel<T>, h: T, max_level: usize, c: T) -> Result<Option<usize>> {
    for n in 1..=max_level {
        let q = model.q_level(h, n)?;
        let t = h * T::c(n as f64);
        if q < t / (c * (T::one() + t)) || q < h / c {
            return Ok(Some(n));
        }
    }
    Ok(None)
}
