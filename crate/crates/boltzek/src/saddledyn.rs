//! Saddle-point linear algebra: the Hamiltonian linearization `F`, its
//! stable/unstable Lagrangian subspaces, and the `Phi` eigenproblem giving
//! `alpha_0` and `nu`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

#[derive(Clone, Debug)]
pub struct SaddleData<T: Real> {
    pub location: Vec<T>,
    pub hess_v: DMatrix<T>,
    /// The negative eigenvalue of `hess_v`.
    pub mu: T,
    pub m0: DMatrix<T>,
}

impl<T: Real> SaddleData<T> {
    pub fn new(location: Vec<T>, hess_v: DMatrix<T>, m0: DMatrix<T>) -> Result<Self> {
        let d = hess_v.nrows();
        if !hess_v.is_square() || m0.shape() != (d, d) || location.len() != d {
            return Err(Error::InvalidInput("inconsistent saddle dimensions".into()));
        }
        let ev = SymmetricEigen::new(hess_v.clone()).eigenvalues;
        let neg: Vec<T> = ev.iter().copied().filter(|e| *e < T::zero()).collect();
        if neg.len() != 1 {
            return Err(Error::InvalidInput(format!("Hess V has {} negative eigenvalues, expected 1", neg.len())));
        }
        Ok(Self { location, hess_v, mu: neg[0], m0 })
    }

    /// One-dimensional saddle with `V'' = mu` and `M_0 = m0`.
    pub fn scalar(mu: T, m0: T) -> Result<Self> {
        Self::new(vec![T::zero()], DMatrix::from_element(1, 1, mu), DMatrix::from_element(1, 1, m0))
    }

    pub fn dim(&self) -> usize {
        self.hess_v.nrows()
    }

    /// `Hess_s W = diag(Hess V / 2, Id / 2)`.
    pub fn hess_w(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut hw = DMatrix::zeros(2 * d, 2 * d);
        hw.view_mut((0, 0), (d, d)).copy_from(&(&self.hess_v * T::c(0.5)));
        for i in 0..d {
            hw[(d + i, d + i)] = T::c(0.5);
        }
        hw
    }
}

#[derive(Clone, Debug)]
pub struct SaddlePrefactor<T: Real> {
    pub alpha0: T,
    /// `(nu_1, nu_2)`, length `2d`.
    pub nu: DVector<T>,
    /// `Hess_s W + nu nu^T`.
    pub hess_phi_plus: DMatrix<T>,
    /// Relative residual of `det(Hess_s W + nu nu^T) = 2^{-2d} |det Hess_s V|`.
    pub det_identity_residual: T,
    /// Relative residual of `alpha0 = M_0 nu_2 . nu_2`.
    pub alpha_identity_residual: T,
    /// `|Phi nu + alpha0 nu| / |nu|`.
    pub eigen_residual: T,
}

impl<T: Real> SaddlePrefactor<T> {
    pub fn nu1(&self) -> DVector<T> {
        let d = self.nu.len() / 2;
        self.nu.rows(0, d).into_owned()
    }

    pub fn nu2(&self) -> DVector<T> {
        let d = self.nu.len() / 2;
        self.nu.rows(d, d).into_owned()
    }
}

/// The `4d x 4d` linearization `F` acting on `(x, v, xi, eta)`.
pub fn build_f<T: Real>(sd: &SaddleData<T>) -> DMatrix<T> {
    let d = sd.dim();
    let mut f = DMatrix::zeros(4 * d, 4 * d);
    let id = DMatrix::<T>::identity(d, d);
    f.view_mut((0, d), (d, d)).copy_from(&id);
    f.view_mut((d, 0), (d, d)).copy_from(&(-&sd.hess_v));
    f.view_mut((d, 3 * d), (d, d)).copy_from(&(&sd.m0 * T::c(2.0)));
    f.view_mut((2 * d, 3 * d), (d, d)).copy_from(&sd.hess_v);
    f.view_mut((3 * d, d), (d, d)).copy_from(&(&sd.m0 * T::c(0.5)));
    f.view_mut((3 * d, 2 * d), (d, d)).copy_from(&(-id));
    f
}

/// `F` with its spectral assertions: no spectrum near `iR`, central symmetry,
/// `2d/2d` split.
pub fn linearization_f<T: Real>(sd: &SaddleData<T>) -> Result<DMatrix<T>> {
    let f = build_f(sd);
    let ev = f.clone().complex_eigenvalues();
    let scale = T::one() + f.amax();
    let tol = T::tol(1e-8) * scale;
    let dist = ev.iter().map(|z| z.re.abs()).fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m });
    if dist < tol {
        return Err(Error::ImaginaryAxisSpectrum { dist: dist.f64() });
    }
    let symmetric = ev.iter().all(|z| ev.iter().any(|w| ((z.re + w.re).powi(2) + (z.im + w.im).powi(2)).sqrt() <= tol));
    let positive = ev.iter().filter(|z| z.re > T::zero()).count();
    if !symmetric || positive != 2 * sd.dim() {
        return Err(Error::ImaginaryAxisSpectrum { dist: dist.f64() });
    }
    Ok(f)
}

/// Complex eigenvalues of `F`.
pub fn f_spectrum<T: Real>(sd: &SaddleData<T>) -> Vec<Complex<T>> {
    build_f(sd).complex_eigenvalues().iter().copied().collect()
}

/// Matrix sign function by scaled Newton iteration.
pub fn matrix_sign<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let mut z = a.clone();
    for _ in 0..100 {
        let inv = z.clone().try_inverse().ok_or(Error::ImaginaryAxisSpectrum { dist: 0.0 })?;
        let det = z.determinant().abs();
        let c = if det > T::zero() { det.powf(-T::one() / T::c(n as f64)) } else { T::one() };
        let next = (&z * c + inv / c) * T::c(0.5);
        let diff = (&next - &z).amax();
        z = next;
        if diff <= T::tol(1e-14) * z.amax() {
            // one unscaled polishing step
            let inv = z.clone().try_inverse().ok_or(Error::ImaginaryAxisSpectrum { dist: 0.0 })?;
            return Ok((&z + inv) * T::c(0.5));
        }
    }
    Ok(z)
}

/// Orthonormal basis of the range of a rank-`r` projector.
fn range_basis<T: Real>(p: &DMatrix<T>, r: usize) -> DMatrix<T> {
    let svd = SVD::new(p.clone(), true, false);
    let u = svd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    DMatrix::from_fn(p.nrows(), r, |i, j| u[(i, order[j])])
}

fn graph<T: Real>(basis: &DMatrix<T>, d2: usize) -> Result<DMatrix<T>> {
    let x = basis.rows(0, d2).into_owned();
    let y = basis.rows(d2, d2).into_owned();
    let sx = SVD::new(x.clone(), false, false).singular_values;
    let smin = sx.iter().fold(T::max_value().unwrap(), |m, v| if *v < m { *v } else { m });
    if smin < T::tol(1e-10) {
        return Err(Error::NotAGraph { sigma: smin.f64() });
    }
    let xinv = x.try_inverse().ok_or(Error::NotAGraph { sigma: 0.0 })?;
    Ok(y * xinv)
}

#[derive(Clone, Debug)]
pub struct StablePhases<T: Real> {
    /// Graph of the `Re > 0` invariant subspace (positive-definite).
    pub hess_phi_plus: DMatrix<T>,
    /// Graph of the `Re < 0` invariant subspace (negative-definite).
    pub hess_phi_minus: DMatrix<T>,
    pub symmetry_defect: T,
}

/// Quadratic phases of the two invariant Lagrangian subspaces of `F`.
pub fn stable_phase<T: Real>(sd: &SaddleData<T>) -> Result<StablePhases<T>> {
    let f = linearization_f(sd)?;
    let d2 = 2 * sd.dim();
    let s = matrix_sign(&f)?;
    let id = DMatrix::<T>::identity(2 * d2, 2 * d2);
    let plus = graph(&range_basis(&((&id + &s) * T::c(0.5)), d2), d2)?;
    let minus = graph(&range_basis(&((&id - &s) * T::c(0.5)), d2), d2)?;
    let defect = (&plus - plus.transpose()).amax().max((&minus - minus.transpose()).amax());
    let scale = T::one() + plus.amax().max(minus.amax());
    if defect > T::tol(1e-9) * scale {
        return Err(Error::InvalidInput(format!("invariant subspace not Lagrangian (defect {})", defect)));
    }
    let sym = |g: &DMatrix<T>| (g + g.transpose()) * T::c(0.5);
    let (plus, minus) = (sym(&plus), sym(&minus));
    let pd = |g: &DMatrix<T>| SymmetricEigen::new(g.clone()).eigenvalues.min() > T::zero();
    if !pd(&plus) || !pd(&(-&minus)) {
        return Err(Error::InvalidInput("quadratic phase is not definite".into()));
    }
    Ok(StablePhases { hess_phi_plus: plus, hess_phi_minus: minus, symmetry_defect: defect })
}

/// `Phi = [[0, -Hess V], [Id, M_0]]`.
pub fn build_phi<T: Real>(sd: &SaddleData<T>) -> DMatrix<T> {
    let d = sd.dim();
    let mut phi = DMatrix::zeros(2 * d, 2 * d);
    phi.view_mut((0, d), (d, d)).copy_from(&(-&sd.hess_v));
    phi.view_mut((d, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
    phi.view_mut((d, d), (d, d)).copy_from(&sd.m0);
    phi
}

fn null_vector<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    let svd = SVD::new(a.clone(), false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let i = svd.singular_values.imin();
    vt.row(i).transpose()
}

/// Unique non-positive eigenvalue `-alpha0` of `Phi`, eigenvector `nu` scaled
/// so that `det(Hess_s W + nu nu^T) = 2^{-2d} |det Hess_s V|`.
pub fn phi_eigenproblem<T: Real>(sd: &SaddleData<T>) -> Result<SaddlePrefactor<T>> {
    let d = sd.dim();
    let phi = build_phi(sd);
    let ev = phi.clone().complex_eigenvalues();
    let nonpos: Vec<Complex<T>> = ev.iter().copied().filter(|z| z.re <= T::zero()).collect();
    if nonpos.len() != 1 {
        return Err(Error::MultipleNonpositiveEigenvalues { count: nonpos.len() });
    }
    let lam = nonpos[0];
    if lam.im.abs() > T::tol(1e-10) * (T::one() + lam.re.abs()) {
        return Err(Error::ComplexLeftmostEigenvalue { re: lam.re.f64(), im: lam.im.f64() });
    }
    let shifted = &phi - DMatrix::identity(2 * d, 2 * d) * lam.re;
    let e = null_vector(&shifted);
    let u = null_vector(&shifted.transpose());
    // second-order accurate eigenvalue from left and right vectors
    let alpha0 = -(u.dot(&(&phi * &e)) / u.dot(&e));

    let e2_norm = e.rows(d, d).norm();
    if e2_norm <= T::tol(1e-12) {
        return Err(Error::InvalidInput("nu_2 vanishes".into()));
    }
    let hw = sd.hess_w();
    let hw_inv = hw.clone().try_inverse().ok_or(Error::InvalidInput("singular Hess W".into()))?;
    let q = e.dot(&(&hw_inv * &e));
    if q >= T::zero() {
        return Err(Error::InvalidInput("determinant identity has no real scale".into()));
    }
    let mut nu = &e * (-T::c(2.0) / q).sqrt();
    let imax = nu.rows(d, d).iamax();
    if nu[d + imax] > T::zero() {
        nu = -nu;
    }
    let hpp = &hw + &nu * nu.transpose();
    let target = sd.hess_v.determinant().abs() / T::c(4f64.powi(d as i32));
    let det_res = ((hpp.determinant() - target) / target).abs();
    let nu2 = nu.rows(d, d).into_owned();
    let m0nu = (&sd.m0 * &nu2).dot(&nu2);
    let alpha_res = ((m0nu - alpha0) / alpha0).abs();
    let eig_res = (&phi * &nu + &nu * alpha0).norm() / nu.norm();
    Ok(SaddlePrefactor {
        alpha0,
        nu,
        hess_phi_plus: hpp,
        det_identity_residual: det_res,
        alpha_identity_residual: alpha_res,
        eigen_residual: eig_res,
    })
}

/// BGK closed form: `alpha0 = (-rho'(0) + sqrt(rho'(0)^2 - 4 mu)) / 2` and
/// `nu_2^2 = alpha0 / rho'(0)`.
pub fn bgk_closed_form<T: Real>(mu: T, rho_prime0: T) -> (T, T) {
    // cancellation-free form of the positive root
    let disc = (rho_prime0 * rho_prime0 - mu * T::c(4.0)).sqrt();
    let alpha0 = -(mu * T::c(2.0)) / (rho_prime0 + disc);
    (alpha0, alpha0 / rho_prime0)
}
