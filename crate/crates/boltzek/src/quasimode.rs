//! Gaussian quasimodes `chi * theta * e^{-W_m/h}` for d = 1 and their
//! Rayleigh quotients.

use crate::collision::{m0_at_rest, CollisionModel};
use crate::discretization::{norm, AssembledOperator};
use crate::error::{Error, Result};
use crate::landscape::{CriticalPoint, Labeling};
use crate::potential::Potential;
use crate::quadrature::{gauss_hermite, gauss_legendre, hermite_normalized};
use crate::saddledyn::{phi_eigenproblem, SaddleData};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{self, Write};

#[derive(Clone, Debug)]
pub struct QuasimodeParams {
    /// `gamma = gamma_factor * sqrt(h)`.
    pub gamma_factor: f64,
    pub levels: usize,
    pub gh_nodes: usize,
    /// Continuum quadrature resolution.
    pub points_per_sqrt_h: usize,
    /// Negate `nu` before the sign rule is applied.
    pub flip_nu: bool,
    /// `false` replaces `theta` by 1.
    pub saddle_cutoff: bool,
}

impl Default for QuasimodeParams {
    fn default() -> Self {
        Self { gamma_factor: 10.0, levels: 40, gh_nodes: 120, points_per_sqrt_h: 40, flip_nu: false, saddle_cutoff: true }
    }
}

/// Linear phase `ell = sign * (nu1 (x - s) + nu2 v)` across one saddle.
#[derive(Clone, Debug)]
pub struct Collar {
    pub saddle: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub sign: f64,
    pub alpha0: f64,
}

impl Collar {
    pub fn ell(&self, x: f64, v: f64) -> f64 {
        self.sign * (self.nu1 * (x - self.saddle) + self.nu2 * v)
    }

    /// Half-width in x of the collar `|ell(x, 0)| <= gamma`.
    pub fn radius(&self, gamma: f64) -> f64 {
        gamma / self.nu1.abs()
    }
}

/// x-cutoff at a potential crest beyond the outer end of `E(m)`.
#[derive(Clone, Copy, Debug)]
pub struct Cutoff {
    pub crest: f64,
    pub width: f64,
    /// `+1` if the crest lies to the right of the minimum.
    pub side: f64,
}

pub struct Quasimode<'a> {
    pub potential: &'a dyn Potential<f64>,
    pub minimum: CriticalPoint<f64>,
    pub h: f64,
    pub gamma: f64,
    pub a_h: f64,
    pub collars: Vec<Collar>,
    pub cutoff: Option<Cutoff>,
    pub params: QuasimodeParams,
    gl: (Vec<f64>, Vec<f64>),
    gh: (Vec<f64>, Vec<f64>),
    he: Vec<Vec<f64>>,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

impl Quasimode<'_> {
    /// Plateau `1` on `[-gamma/2, gamma/2]`, support `[-gamma, gamma]`.
    pub fn zeta(&self, t: f64) -> f64 {
        let half = 0.5 * self.gamma;
        1.0 - smoothstep((t.abs() - half) / half)
    }

    /// `int_0^l zeta(t) e^{-t^2/2h} dt`.
    pub fn zeta_integral(&self, l: f64) -> f64 {
        zeta_integral(l, self.h, self.gamma, &self.gl)
    }

    pub fn theta(&self, x: f64, v: f64) -> f64 {
        if !self.params.saddle_cutoff {
            return 1.0;
        }
        self.collars.iter().map(|c| 0.5 * (1.0 + self.zeta_integral(c.ell(x, v)) / self.a_h)).product()
    }

    pub fn chi(&self, x: f64) -> f64 {
        match self.cutoff {
            None => 1.0,
            Some(c) => {
                let d = c.side * (c.crest - x);
                smoothstep(d / c.width)
            }
        }
    }

    /// Scaled Hermite coefficients `c_n(x)`, `n < levels`.
    pub fn coefficients(&self, x: f64) -> Vec<f64> {
        let levels = self.params.levels;
        let mut c = vec![0.0; levels];
        let chi = self.chi(x);
        if chi == 0.0 {
            return c;
        }
        let w = (2.0 * PI * self.h).powf(0.25) * (-(self.potential.value(&[x]) - self.minimum.value) / (2.0 * self.h)).exp() * chi;
        if w == 0.0 {
            return c;
        }
        let sh = self.h.sqrt();
        for (i, (&u, &wi)) in self.gh.0.iter().zip(&self.gh.1).enumerate() {
            let th = self.theta(x, sh * u);
            if th == 0.0 {
                continue;
            }
            for (n, cn) in c.iter_mut().enumerate() {
                *cn += wi * th * self.he[i][n];
            }
        }
        c.iter_mut().for_each(|v| *v *= w);
        c
    }

    /// Phase-space value `chi theta e^{-(V - V(m))/2h} e^{-v^2/4h}`.
    pub fn value(&self, x: f64, v: f64) -> f64 {
        self.chi(x) * self.theta(x, v) * (-(self.potential.value(&[x]) - self.minimum.value) / (2.0 * self.h) - v * v / (4.0 * self.h)).exp()
    }

    /// Quasimode sampled on the unknowns of `op` (unnormalized).
    pub fn sample(&self, op: &AssembledOperator) -> Vec<f64> {
        let nh = op.n_hermite.min(self.params.levels);
        let rows: Vec<Vec<(usize, f64)>> = (0..op.nx)
            .into_par_iter()
            .map(|ix| {
                let centre = self.coefficients(op.position(ix, 0));
                let face = self.coefficients(op.position(ix, 1));
                (0..nh)
                    .map(|n| {
                        let same = op.position(ix, n) == op.position(ix, 0);
                        (op.index(ix, n), if same { centre[n] } else { face[n] })
                    })
                    .collect()
            })
            .collect();
        let mut u = vec![0.0; op.dim()];
        for (k, val) in rows.into_iter().flatten() {
            u[k] = val;
        }
        u
    }

    /// Continuum quadrature grid spacing.
    pub fn quadrature_step(&self) -> f64 {
        self.h.sqrt() / self.params.points_per_sqrt_h as f64
    }

    /// Per-level `int |c_n|^2 dx` on the fine grid over the potential window.
    pub fn level_masses(&self) -> Result<Vec<f64>> {
        if self.params.points_per_sqrt_h < 12 {
            return Err(Error::GridTooCoarse(format!("{} points per sqrt(h), need 12", self.params.points_per_sqrt_h)));
        }
        let w = self.potential.window();
        let (lo, hi) = (w.lo[0], w.hi[0]);
        let n = ((hi - lo) / self.quadrature_step()).ceil() as usize + 1;
        let dx = (hi - lo) / (n - 1) as f64;
        let masses = (0..n)
            .into_par_iter()
            .map(|i| {
                let wt = if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
                self.coefficients(lo + i as f64 * dx).into_iter().map(|c| wt * c * c).collect::<Vec<f64>>()
            })
            .reduce(|| vec![0.0; self.params.levels], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
        Ok(masses)
    }
}

fn zeta_integral(l: f64, h: f64, gamma: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * gamma;
    let a = l.abs();
    let inner = (PI * h / 2.0).sqrt() * libm::erf(a.min(half) / (2.0 * h).sqrt());
    let mut outer = 0.0;
    if a > half {
        let b = a.min(gamma);
        let (mid, rad) = (0.5 * (half + b), 0.5 * (b - half));
        for (&t, &w) in gl.0.iter().zip(&gl.1) {
            let s = mid + rad * t;
            let z = 1.0 - smoothstep((s - half) / half);
            outer += w * rad * z * (-s * s / (2.0 * h)).exp();
        }
    }
    l.signum() * (inner + outer)
}

/// Quasimode attached to `lab.minima[index]` (must be a non-global minimum).
pub fn build_quasimode<'a>(
    p: &'a dyn Potential<f64>,
    lab: &Labeling<f64>,
    model: &CollisionModel<f64>,
    index: usize,
    h: f64,
    params: QuasimodeParams,
) -> Result<Quasimode<'a>> {
    if p.dim() != 1 {
        return Err(Error::InvalidInput("quasimodes are built for d = 1 only".into()));
    }
    let lm = lab
        .minima
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("no labeled minimum {index}")))?;
    if lm.saddles.is_empty() {
        return Err(Error::InvalidInput("the global minimum has no quasimode".into()));
    }
    let m = lm.point.location[0];
    let gamma = params.gamma_factor * h.sqrt();
    let gl = gauss_legendre(32);
    let m0 = m0_at_rest(model);
    let step = lab.grid.step[0];
    let mut collars = Vec::new();
    for &si in &lm.saddles {
        let sp = &lab.saddles[si].point;
        let sd = SaddleData::new(sp.location.clone(), sp.hessian.clone(), m0.clone())?;
        let pf = phi_eigenproblem(&sd)?;
        let flip = if params.flip_nu { -1.0 } else { 1.0 };
        let (nu1, nu2) = (flip * pf.nu[0], flip * pf.nu[1]);
        let s = sp.location[0];
        let probe = s + step * (m - s).signum();
        let sign = (nu1 * (probe - s)).signum();
        collars.push(Collar { saddle: s, nu1, nu2, sign, alpha0: pf.alpha0 });
    }
    let mut spans: Vec<(f64, f64)> = collars.iter().map(|c| (c.saddle - c.radius(gamma), c.saddle + c.radius(gamma))).collect();
    spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if spans.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::CollarOverlap(collars.iter().map(|c| c.saddle).collect()));
    }
    let cutoff = outer_cutoff(lab, index, &collars);
    let a_h = zeta_integral(f64::INFINITY, h, gamma, &gl);
    let gh = gauss_hermite(params.gh_nodes);
    let he = gh.0.iter().map(|&u| hermite_normalized(params.levels, u)).collect();
    Ok(Quasimode { potential: p, minimum: lm.point.clone(), h, gamma, a_h, collars, cutoff, params, gl, gh, he })
}

fn outer_cutoff(lab: &Labeling<f64>, index: usize, collars: &[Collar]) -> Option<Cutoff> {
    let lm = &lab.minima[index];
    let m = lm.point.location[0];
    let (a, b) = lm.region.interval?;
    let saddle_side = |side: f64| collars.iter().any(|c| (c.saddle - m) * side > 0.0);
    let mut out = None;
    for (end, side) in [(a, -1.0), (b, 1.0)] {
        if saddle_side(side) {
            continue;
        }
        let crest = lab
            .critical
            .iter()
            .filter(|c| c.index == 1 && side * (c.location[0] - end) > 0.0)
            .map(|c| c.location[0])
            .min_by(|x, y| (x - m).abs().partial_cmp(&(y - m).abs()).unwrap());
        if let Some(crest) = crest {
            out = Some(Cutoff { crest, width: 0.5 * (crest - end).abs(), side });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct RayleighReport {
    /// `<A u, u> / <u, u>` on the assembled operator.
    pub discrete: f64,
    /// `sum_n rho(h n) int |c_n|^2 / |f|^2`.
    pub continuum: f64,
    /// `|<X u, u>| / <A u, u>`.
    pub transport_relative: f64,
    /// `|f|^2 det(Hess_m V)^{1/2} / (2 pi h)`.
    pub normalization: f64,
}

pub fn rayleigh_quotient(q: &Quasimode<'_>, op: &AssembledOperator, model: &CollisionModel<f64>) -> Result<RayleighReport> {
    let u = q.sample(op);
    let au = op.apply(&u);
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let pu: f64 = au.iter().zip(&u).map(|(a, b)| a * b).sum();
    let qu: f64 = (0..op.nx)
        .flat_map(|ix| (0..op.n_hermite).map(move |n| (ix, n)))
        .map(|(ix, n)| op.q_diag[n] * u[op.index(ix, n)].powi(2))
        .sum();
    let transport_relative = (pu - qu).abs() / pu.abs();
    let masses = q.level_masses()?;
    let total: f64 = masses.iter().sum();
    let mut qf = 0.0;
    for (n, m) in masses.iter().enumerate() {
        qf += model.q_level(q.h, n)? * m;
    }
    let discrete = pu / uu;
    let continuum = qf / total;
    if !(discrete > 0.0 && continuum > 0.0) {
        return Err(Error::InvalidInput(format!("Rayleigh quotient not positive ({discrete:e}, {continuum:e})")));
    }
    let det = q.minimum.hessian.determinant();
    Ok(RayleighReport { discrete, continuum, transport_relative, normalization: total * det.sqrt() / (2.0 * PI * q.h) })
}

#[derive(Clone, Copy, Debug)]
pub struct Residuals {
    /// `|A f|^2` for unit `f`.
    pub forward: f64,
    /// `|A^T f|^2` for unit `f`.
    pub adjoint: f64,
    /// `<A f, f>`.
    pub quotient: f64,
}

pub fn quasimode_residual(q: &Quasimode<'_>, op: &AssembledOperator) -> Residuals {
    let mut u = q.sample(op);
    let nu = norm(&u);
    u.iter_mut().for_each(|x| *x /= nu);
    let au = op.apply(&u);
    let atu = op.matrix.mul_t(&u);
    Residuals {
        forward: au.iter().map(|x| x * x).sum(),
        adjoint: atu.iter().map(|x| x * x).sum(),
        quotient: au.iter().zip(&u).map(|(a, b)| a * b).sum(),
    }
}

/// `x, v, f(x, v)` rows on a tensor grid.
pub fn write_csv<W: Write>(q: &Quasimode<'_>, xs: &[f64], vs: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "x,v,f")?;
    for &x in xs {
        for &v in vs {
            writeln!(w, "{x},{v},{:e}", q.value(x, v))?;
        }
    }
    Ok(())
}
