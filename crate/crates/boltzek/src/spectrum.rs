//! Small spectrum of the assembled operator: shift-invert implicitly restarted
//! Arnoldi, left eigenvectors for spectral projectors, resolvent probes.

use crate::discretization::{norm_c, AssembledOperator};
use crate::ekformula::EKPrediction;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(x: &mut [C], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Eigenpairs of an upper Hessenberg matrix via complex Schur form.
fn hessenberg_eig(h: &DMatrix<C>) -> (Vec<C>, DMatrix<C>) {
    let m = h.nrows();
    let (q, t) = Schur::new(h.clone()).unpack();
    let mut vecs = DMatrix::zeros(m, m);
    let mut vals = Vec::with_capacity(m);
    let tiny = f64::EPSILON * (1.0 + t.norm());
    for i in 0..m {
        let lam = t[(i, i)];
        vals.push(lam);
        let mut y = vec![ZERO; m];
        y[i] = ONE;
        for j in (0..i).rev() {
            let s: C = (j + 1..=i).map(|l| t[(j, l)] * y[l]).sum();
            let mut d = t[(j, j)] - lam;
            if d.norm() < tiny {
                d = C::new(tiny, 0.0);
            }
            y[j] = -s / d;
        }
        let x = &q * DMatrix::from_column_slice(m, 1, &y);
        let nx = x.norm();
        for r in 0..m {
            vecs[(r, i)] = x[(r, 0)] / nx;
        }
    }
    (vals, vecs)
}

/// One implicit QR sweep with shift `mu` on the leading `m x m` Hessenberg
/// block, accumulating the unitary factor into `q`.
fn shifted_qr(h: &mut DMatrix<C>, q: &mut DMatrix<C>, m: usize, mu: C) {
    for i in 0..m {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let (a, b) = (h[(i, i)], h[(i + 1, i)]);
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (a / r, b / r) };
        for j in i..m {
            let (x, y) = (h[(i, j)], h[(i + 1, j)]);
            h[(i, j)] = c.conj() * x + s.conj() * y;
            h[(i + 1, j)] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (i, &(c, s)) in rots.iter().enumerate() {
        for r in 0..(i + 2).min(m) {
            let (x, y) = (h[(r, i)], h[(r, i + 1)]);
            h[(r, i)] = c * x + s * y;
            h[(r, i + 1)] = -s.conj() * x + c.conj() * y;
        }
        for r in 0..q.nrows() {
            let (x, y) = (q[(r, i)], q[(r, i + 1)]);
            q[(r, i)] = c * x + s * y;
            q[(r, i + 1)] = -s.conj() * x + c.conj() * y;
        }
    }
    for i in 0..m {
        h[(i, i)] += mu;
    }
}

#[derive(Clone, Debug)]
pub struct ArnoldiOptions {
    pub nev: usize,
    pub ncv: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

/// Eigenpairs of largest modulus of the operator `op`.
pub fn arnoldi<F>(n: usize, mut op: F, opts: &ArnoldiOptions) -> Result<(Vec<C>, Vec<Vec<C>>)>
where
    F: FnMut(&[C]) -> Result<Vec<C>>,
{
    let nev = opts.nev.min(n);
    let ncv = opts.ncv.max(nev + 2).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_unit = |basis: &[Vec<C>]| -> Vec<C> {
        let mut v: Vec<C> = (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        for b in basis {
            let c = dot(b, &v);
            axpy(-c, b, &mut v);
        }
        let nv = norm_c(&v);
        scale(&mut v, 1.0 / nv);
        v
    };
    let mut basis: Vec<Vec<C>> = vec![random_unit(&[])];
    let mut h = DMatrix::<C>::zeros(ncv + 1, ncv);
    let mut k = 0;
    let mut converged = 0;
    for _ in 0..opts.max_restarts {
        for j in k..ncv {
            let mut w = op(&basis[j])?;
            let wn0 = norm_c(&w);
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(b, &w);
                    h[(i, j)] += c;
                    axpy(-c, b, &mut w);
                }
            }
            let beta = norm_c(&w);
            if beta <= 1e-13 * wn0 {
                h[(j + 1, j)] = ZERO;
                basis.truncate(j + 1);
                let fresh = random_unit(&basis);
                basis.push(fresh);
            } else {
                h[(j + 1, j)] = C::new(beta, 0.0);
                scale(&mut w, 1.0 / beta);
                basis.truncate(j + 1);
                basis.push(w);
            }
        }
        let hm = h.view((0, 0), (ncv, ncv)).into_owned();
        let beta = h[(ncv, ncv - 1)].norm();
        let (vals, vecs) = hessenberg_eig(&hm);
        let mut order: Vec<usize> = (0..ncv).collect();
        order.sort_by(|&a, &b| vals[b].norm().partial_cmp(&vals[a].norm()).unwrap());
        let resid = |i: usize| beta * vecs[(ncv - 1, i)].norm();
        converged = order.iter().take(nev).filter(|&&i| resid(i) <= opts.tol * vals[i].norm()).count();
        if converged == nev {
            let mut out_vals = Vec::with_capacity(nev);
            let mut out_vecs = Vec::with_capacity(nev);
            for &i in order.iter().take(nev) {
                let mut x = vec![ZERO; n];
                for (r, b) in basis.iter().enumerate().take(ncv) {
                    axpy(vecs[(r, i)], b, &mut x);
                }
                let nx = norm_c(&x);
                scale(&mut x, 1.0 / nx);
                out_vals.push(vals[i]);
                out_vecs.push(x);
            }
            return Ok((out_vals, out_vecs));
        }
        // implicit restart with the unwanted Ritz values as exact shifts
        k = (nev + (ncv - nev) / 3).max(nev + 1).min(ncv - 1);
        let mut hh = hm;
        let mut q = DMatrix::<C>::identity(ncv, ncv);
        for &i in order.iter().skip(k) {
            shifted_qr(&mut hh, &mut q, ncv, vals[i]);
        }
        let mut new_basis: Vec<Vec<C>> = Vec::with_capacity(k + 1);
        for col in 0..=k {
            let mut x = vec![ZERO; n];
            for (r, b) in basis.iter().enumerate().take(ncv) {
                axpy(q[(r, col)], b, &mut x);
            }
            new_basis.push(x);
        }
        let vk = new_basis.pop().unwrap();
        let mut f: Vec<C> = vk.iter().map(|v| v * hh[(k, k - 1)]).collect();
        axpy(h[(ncv, ncv - 1)] * q[(ncv - 1, k - 1)], &basis[ncv], &mut f);
        h.fill(ZERO);
        for r in 0..k {
            for c in 0..k {
                h[(r, c)] = hh[(r, c)];
            }
        }
        let fn_ = norm_c(&f);
        new_basis.truncate(k);
        if fn_ <= 1e-300 {
            let fresh = random_unit(&new_basis);
            new_basis.push(fresh);
            h[(k, k - 1)] = ZERO;
        } else {
            scale(&mut f, 1.0 / fn_);
            new_basis.push(f);
            h[(k, k - 1)] = C::new(fn_, 0.0);
        }
        basis = new_basis;
    }
    Err(Error::NotConverged { converged, wanted: nev, iterations: opts.max_restarts })
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Number of eigenvalues nearest 0.
    pub count: usize,
    /// Relative Ritz tolerance.
    pub tol: f64,
    /// Regularizing shift `-shift` used for shift-invert.
    pub shift: f64,
    pub max_restarts: usize,
    pub left_vectors: bool,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(count: usize, h: f64) -> Self {
        Self { count, tol: 1e-12, shift: 1e-2 * h * h, max_restarts: 300, left_vectors: true, seed: 7 }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub h: f64,
    /// Sorted by modulus.
    pub eigenvalues: Vec<C>,
    /// `|A x - lambda x|` for unit `x`.
    pub residuals: Vec<f64>,
    pub right: Vec<Vec<C>>,
    /// Left vectors normalized so that `w_i^T v_i = 1` (empty if not requested).
    pub left: Vec<Vec<C>>,
    /// `1 / |w^T v|` with unit `w`, `v`.
    pub condition: Vec<f64>,
    pub norm_a: f64,
    pub tail_mass: Vec<f64>,
}

impl SpectralResult {
    /// Number of eigenvalues with `Re z <= c h^2`.
    pub fn count_in_strip(&self, c: f64) -> usize {
        self.eigenvalues.iter().filter(|z| z.re <= c * self.h * self.h).count()
    }

    /// Projector onto the first `k` eigenvalues: `u -> sum_i v_i (w_i^T u)`.
    pub fn project(&self, k: usize, u: &[C]) -> Vec<C> {
        let mut out = vec![ZERO; u.len()];
        for i in 0..k.min(self.left.len()) {
            let c: C = self.left[i].iter().zip(u).map(|(w, x)| w * x).sum();
            axpy(c, &self.right[i], &mut out);
        }
        out
    }

    /// Conjugate-pair closure of non-real eigenvalues.
    pub fn conjugate_closed(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|z| {
            z.im.abs() <= tol * (1.0 + z.norm()) || self.eigenvalues.iter().any(|w| (w - z.conj()).norm() <= tol * (1.0 + z.norm()))
        })
    }
}

/// The `count` eigenvalues of `A` nearest 0.
pub fn small_eigenvalues(op: &AssembledOperator, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = op.dim();
    let sigma = C::new(-opts.shift, 0.0);
    let solver = op.shifted(sigma)?;
    let want = opts.count + 1;
    let ao = ArnoldiOptions { nev: want, ncv: 3 * want, tol: opts.tol, max_restarts: opts.max_restarts, seed: opts.seed };
    let (theta, vecs) = arnoldi(
        n,
        |v| {
            let mut w = v.to_vec();
            solver.solve_fast(&mut w);
            Ok(w)
        },
        &ao,
    )?;
    let mut pairs: Vec<(C, Vec<C>)> = theta.iter().map(|t| sigma + ONE / t).zip(vecs).collect();
    pairs.sort_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap());
    let mut keep = opts.count.min(pairs.len());
    if keep < pairs.len() {
        let last = pairs[keep - 1].0;
        if last.im.abs() > 1e-10 * last.norm() && (pairs[keep].0 - last.conj()).norm() <= 1e-8 * last.norm() {
            keep += 1;
        }
    }
    pairs.truncate(keep);

    let mut left: Vec<Vec<C>> = Vec::new();
    let mut condition = vec![f64::NAN; pairs.len()];
    if opts.left_vectors {
        let ao_t = ArnoldiOptions { seed: opts.seed + 1, ..ao.clone() };
        let (theta_t, vecs_t) = arnoldi(
            n,
            |v| {
                let mut w = v.to_vec();
                solver.solve_transpose_fast(&mut w);
                Ok(w)
            },
            &ao_t,
        )?;
        let lam_t: Vec<C> = theta_t.iter().map(|t| sigma + ONE / t).collect();
        for (i, (lam, v)) in pairs.iter().enumerate() {
            let j = (0..lam_t.len())
                .min_by(|&a, &b| (lam_t[a] - lam).norm().partial_cmp(&(lam_t[b] - lam).norm()).unwrap())
                .unwrap();
            let w = &vecs_t[j];
            let wv: C = w.iter().zip(v).map(|(a, b)| a * b).sum();
            condition[i] = 1.0 / wv.norm();
            left.push(w.iter().map(|a| a / wv).collect());
        }
    }
    let residuals = pairs
        .iter()
        .map(|(lam, v)| {
            let av = op.apply_c(v);
            let r: Vec<C> = av.iter().zip(v).map(|(a, x)| a - lam * x).collect();
            norm_c(&r) / norm_c(v)
        })
        .collect();
    let tail_mass = pairs.iter().map(|(_, v)| op.tail_mass(v)).collect();
    let (eigenvalues, right): (Vec<C>, Vec<Vec<C>>) = pairs.into_iter().unzip();
    Ok(SpectralResult { h: op.h, eigenvalues, residuals, right, left, condition, norm_a: op.norm(), tail_mass })
}

#[derive(Clone, Copy, Debug)]
pub struct ResolventProbe {
    pub z: C,
    /// Estimate of `|(A - z)^{-1}|`.
    pub norm: f64,
    /// `h^2 * norm`.
    pub scaled: f64,
}

/// `|(A - z)^{-1}|` by inverse power iteration on `(A - z)^H (A - z)`.
pub fn resolvent_norm(op: &AssembledOperator, z: C, iters: usize) -> Result<f64> {
    let solver = op.shifted(z)?;
    let n = op.dim();
    let mut x: Vec<C> = (0..n).map(|i| C::new(1.0 + ((i * 7919) % 17) as f64 / 17.0, 0.0)).collect();
    let nx = norm_c(&x);
    scale(&mut x, 1.0 / nx);
    let mut est = 0.0;
    for _ in 0..iters {
        let mut y = x.clone();
        solver.solve_fast(&mut y);
        let mut w: Vec<C> = y.iter().map(|v| v.conj()).collect();
        solver.solve_transpose_fast(&mut w);
        let w: Vec<C> = w.iter().map(|v| v.conj()).collect();
        let nw = norm_c(&w);
        est = nw.sqrt();
        x = w;
        scale(&mut x, 1.0 / nw);
    }
    Ok(est)
}

/// Probes on the circles `|z| = ctilde h^2`, `|z| = c h^2` and the segment
/// `Re z = c h^2`, `|Im z| <= 2 h^2`.
pub fn resolvent_probe(op: &AssembledOperator, h: f64, c: f64, ctilde: f64, nsamples: usize) -> Result<Vec<ResolventProbe>> {
    let h2 = h * h;
    let mut zs = Vec::with_capacity(3 * nsamples);
    for r in [ctilde * h2, c * h2] {
        for k in 0..nsamples {
            let t = 2.0 * std::f64::consts::PI * k as f64 / nsamples as f64;
            zs.push(C::from_polar(r, t));
        }
    }
    for k in 0..nsamples {
        let y = -2.0 + 4.0 * k as f64 / (nsamples.max(2) - 1) as f64;
        zs.push(C::new(c * h2, y * h2));
    }
    zs.par_iter()
        .map(|&z| {
            let nr = resolvent_norm(op, z, 30)?;
            Ok(ResolventProbe { z, norm: nr, scaled: h2 * nr })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MatchRow {
    pub minimum: Vec<f64>,
    pub lambda_numeric: C,
    pub lambda_ek: f64,
    pub ratio: f64,
    pub flagged: bool,
}

/// Pairs the nonzero small eigenvalues (`Re <= c h^2`, kernel excluded) with
/// predictions by magnitude order.
pub fn match_predictions(sr: &SpectralResult, preds: &[EKPrediction<f64>], c: f64, band: f64) -> Result<Vec<MatchRow>> {
    let h = sr.h;
    let mut small: Vec<C> = sr.eigenvalues.iter().copied().filter(|z| z.re <= c * h * h).collect();
    small.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let nonzero: Vec<C> = small.into_iter().skip(1).collect();
    if nonzero.len() != preds.len() {
        return Err(Error::CountMismatch { numeric: nonzero.len(), predicted: preds.len() });
    }
    let mut ps: Vec<&EKPrediction<f64>> = preds.iter().collect();
    ps.sort_by(|a, b| a.lambda(h).partial_cmp(&b.lambda(h)).unwrap());
    Ok(nonzero
        .iter()
        .zip(ps)
        .map(|(lam, p)| {
            let ek = p.lambda(h);
            let ratio = lam.re / ek;
            MatchRow {
                minimum: p.minimum.location_f64(),
                lambda_numeric: *lam,
                lambda_ek: ek,
                ratio,
                flagged: (ratio - 1.0).abs() > band,
            }
        })
        .collect())
}
