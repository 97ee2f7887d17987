//! Finite-dimensional `P_h = X_0 + Q_h` for d = 1: uniform x-grid times the
//! scaled Hermite basis in velocity.
//!
//! Unknown `(ix, n)` is stored at `ix * n_hermite + n`. Transport is written as
//! `X_0 = b* (x) a - b (x) a*` with `a = h d/dx + V'/2`, `v = b + b*` and
//! `h d/dv = (b - b*)/2`.

use crate::banded::BandLu;
use crate::collision::CollisionModel;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::sparse::Csr;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Even Hermite levels at cell centres, odd levels at cell faces; `a` is
    /// discretized as `e^{-V/2h} h D e^{V/2h}` so the Maxwellian is an exact
    /// discrete kernel vector.
    Staggered,
    /// Centred differences for `h d/dx`, all levels at cell centres.
    Central,
    /// Centred differences plus grid-scale diffusion `(h dx / 2)(-Laplacian)`.
    Upwind,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "staggered" => Ok(Scheme::Staggered),
            "central" => Ok(Scheme::Central),
            "upwind" => Ok(Scheme::Upwind),
            o => Err(Error::InvalidInput(format!("unknown scheme '{o}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub h: f64,
    pub nx: usize,
    pub n_hermite: usize,
    pub dx: f64,
    pub xmin: f64,
    pub xmax: f64,
    pub scheme: Scheme,
    pub matrix: Csr,
    /// `V` at cell centres and faces.
    pub v_nodes: Vec<f64>,
    pub v_edges: Vec<f64>,
    pub q_diag: Vec<f64>,
    /// `min V` over the grid, used as exponent offset.
    pub v_min: f64,
    pub mass_weight: f64,
    pub kl: usize,
    pub ku: usize,
}

/// Grid and basis parameters.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub nx: usize,
    pub n_hermite: usize,
    pub scheme: Scheme,
    /// Overrides the potential's window.
    pub window: Option<(f64, f64)>,
}

impl GridSpec {
    pub fn new(nx: usize, n_hermite: usize) -> Self {
        Self { nx, n_hermite, scheme: Scheme::Staggered, window: None }
    }

    pub fn scheme(mut self, s: Scheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }
}

pub fn assemble(p: &dyn Potential<f64>, model: &CollisionModel<f64>, h: f64, spec: &GridSpec) -> Result<AssembledOperator> {
    if p.dim() != 1 {
        return Err(Error::InvalidInput("assembly supports d = 1 only".into()));
    }
    if h <= 0.0 || spec.nx < 4 {
        return Err(Error::InvalidInput("need h > 0 and nx >= 4".into()));
    }
    if spec.n_hermite < 8 {
        return Err(Error::InvalidInput("n_hermite must be at least 8".into()));
    }
    let (xmin, xmax) = spec.window.unwrap_or((p.window().lo[0], p.window().hi[0]));
    let (nx, nh) = (spec.nx, spec.n_hermite);
    let dx = (xmax - xmin) / nx as f64;
    let v = |x: f64| p.value(&[x]);
    let dv = |x: f64| p.grad(&[x])[0];
    let nodes: Vec<f64> = (0..nx).map(|i| xmin + (i as f64 + 0.5) * dx).collect();
    let edges: Vec<f64> = (0..nx).map(|i| xmin + (i as f64 + 1.0) * dx).collect();
    let v_nodes: Vec<f64> = nodes.iter().map(|&x| v(x)).collect();
    let v_edges: Vec<f64> = edges.iter().map(|&x| v(x)).collect();
    let v_min = v_nodes.iter().chain(&v_edges).copied().fold(f64::INFINITY, f64::min);
    let boundary = (-(v(xmin).min(v(xmax)) - v_min) / (2.0 * h)).exp();
    if boundary > 1e-8 {
        return Err(Error::WindowTooSmall { weight: boundary });
    }
    let q_diag: Vec<f64> = (0..nh).map(|n| model.q_level(h, n)).collect::<Result<_>>()?;

    let idx = |ix: usize, n: usize| ix * nh + n;
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(nx * nh * 7);
    for ix in 0..nx {
        for (n, &q) in q_diag.iter().enumerate() {
            if q != 0.0 {
                t.push((idx(ix, n), idx(ix, n), q));
            }
        }
    }
    let r = h / dx;
    for n in 0..nh - 1 {
        let c = (h * (n + 1) as f64).sqrt();
        // (row, col, value) of the discrete `a` mapping level n to level n+1
        let mut a: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * nx);
        match spec.scheme {
            Scheme::Staggered if n % 2 == 0 => {
                for i in 0..nx {
                    a.push((i, i, -r * ((v_nodes[i] - v_edges[i]) / (2.0 * h)).exp()));
                    if i + 1 < nx {
                        a.push((i, i + 1, r * ((v_nodes[i + 1] - v_edges[i]) / (2.0 * h)).exp()));
                    }
                }
            }
            Scheme::Staggered => {
                for i in 0..nx {
                    a.push((i, i, r * ((v_edges[i] - v_nodes[i]) / (2.0 * h)).exp()));
                    if i > 0 {
                        a.push((i, i - 1, -r * ((v_edges[i - 1] - v_nodes[i]) / (2.0 * h)).exp()));
                    }
                }
            }
            Scheme::Central | Scheme::Upwind => {
                for i in 0..nx {
                    a.push((i, i, 0.5 * dv(nodes[i])));
                    if i + 1 < nx {
                        a.push((i, i + 1, 0.5 * r));
                    }
                    if i > 0 {
                        a.push((i, i - 1, -0.5 * r));
                    }
                }
            }
        }
        for (i, j, val) in a {
            t.push((idx(i, n + 1), idx(j, n), c * val));
            t.push((idx(j, n), idx(i, n + 1), -c * val));
        }
    }
    if spec.scheme == Scheme::Upwind {
        let nu = 0.5 * h * dx / (dx * dx);
        for ix in 0..nx {
            for n in 0..nh {
                t.push((idx(ix, n), idx(ix, n), 2.0 * nu));
                if ix > 0 {
                    t.push((idx(ix, n), idx(ix - 1, n), -nu));
                }
                if ix + 1 < nx {
                    t.push((idx(ix, n), idx(ix + 1, n), -nu));
                }
            }
        }
    }
    let matrix = Csr::from_triplets(nx * nh, t);
    let (kl, ku) = matrix.bandwidths();
    Ok(AssembledOperator {
        h,
        nx,
        n_hermite: nh,
        dx,
        xmin,
        xmax,
        scheme: spec.scheme,
        matrix,
        v_nodes,
        v_edges,
        q_diag,
        v_min,
        mass_weight: dx,
        kl,
        ku,
    })
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.nx * self.n_hermite
    }

    pub fn index(&self, ix: usize, n: usize) -> usize {
        ix * self.n_hermite + n
    }

    /// Position of unknown `(ix, n)`.
    pub fn position(&self, ix: usize, n: usize) -> f64 {
        match self.scheme {
            Scheme::Staggered if n % 2 == 1 => self.xmin + (ix as f64 + 1.0) * self.dx,
            _ => self.xmin + (ix as f64 + 0.5) * self.dx,
        }
    }

    fn potential_at(&self, ix: usize, n: usize) -> f64 {
        match self.scheme {
            Scheme::Staggered if n % 2 == 1 => self.v_edges[ix],
            _ => self.v_nodes[ix],
        }
    }

    /// Normalized discrete Maxwellian `e^{-(V - min V)/2h}` on Hermite level 0.
    pub fn maxwellian(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        for ix in 0..self.nx {
            u[self.index(ix, 0)] = (-(self.potential_at(ix, 0) - self.v_min) / (2.0 * self.h)).exp();
        }
        let nrm = norm(&u);
        u.iter_mut().for_each(|x| *x /= nrm);
        u
    }

    /// Level-0 vector `e^{-(V - v_ref)/2h} * indicator(x)`, normalized.
    pub fn level0_profile(&self, v_ref: f64, indicator: impl Fn(f64) -> bool) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        for ix in 0..self.nx {
            let x = self.position(ix, 0);
            if indicator(x) {
                u[self.index(ix, 0)] = (-(self.potential_at(ix, 0) - v_ref) / (2.0 * self.h)).exp();
            }
        }
        let nrm = norm(&u);
        u.iter_mut().for_each(|x| *x /= nrm);
        u
    }

    /// `|A M| / |M|` for the discrete Maxwellian.
    pub fn kernel_residual(&self) -> f64 {
        let m = self.maxwellian();
        norm(&self.apply(&m))
    }

    /// Fraction of the norm carried by the top two Hermite levels.
    pub fn tail_mass(&self, u: &[Complex64]) -> f64 {
        let total: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let top: f64 = (0..self.nx)
            .flat_map(|ix| [self.index(ix, self.n_hermite - 1), self.index(ix, self.n_hermite - 2)])
            .map(|k| u[k].norm_sqr())
            .sum();
        (top / total).sqrt()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul(x)
    }

    pub fn apply_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_c(x)
    }

    pub fn apply_transpose_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_t_c(x)
    }

    /// Spectral norm estimate.
    pub fn norm(&self) -> f64 {
        self.matrix.norm2_estimate(60)
    }

    /// LU of `alpha I + beta A`.
    fn factor_affine(&self, alpha: Complex64, beta: Complex64) -> BandLu<Complex64> {
        BandLu::factor(self.dim(), self.kl, self.ku, |i| {
            let mut row: Vec<(usize, Complex64)> = self.matrix.row(i).map(|(j, a)| (j, beta * a)).collect();
            row.push((i, alpha));
            row
        })
    }

    fn factor_affine_real(&self, alpha: f64, beta: f64) -> BandLu<f64> {
        BandLu::factor(self.dim(), self.kl, self.ku, |i| {
            let mut row: Vec<(usize, f64)> = self.matrix.row(i).map(|(j, a)| (j, beta * a)).collect();
            row.push((i, alpha));
            row
        })
    }

    /// Factorization of `A - z I` for repeated solves.
    pub fn shifted(&self, z: Complex64) -> Result<ShiftedSolver<'_>> {
        let lu = self.factor_affine(-z, Complex64::new(1.0, 0.0));
        if lu.pivot_ratio < 1e-14 {
            return Err(Error::SingularShift { re: z.re, im: z.im });
        }
        Ok(ShiftedSolver { op: self, z, lu })
    }

    /// Factorization of `I + tau A` (implicit time stepping).
    pub fn implicit_factor(&self, tau: f64) -> BandLu<f64> {
        self.factor_affine_real(1.0, tau)
    }
}

pub struct ShiftedSolver<'a> {
    pub op: &'a AssembledOperator,
    pub z: Complex64,
    lu: BandLu<Complex64>,
}

/// Residual history of a refined solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub backward_error: f64,
    pub refinements: usize,
}

impl ShiftedSolver<'_> {
    fn residual(&self, w: &[Complex64], rhs: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let aw = if adjoint { self.op.apply_transpose_c(w) } else { self.op.apply_c(w) };
        let z = if adjoint { self.z.conj() } else { self.z };
        rhs.iter().zip(aw.iter().zip(w)).map(|(b, (a, x))| b - (a - z * x)).collect()
    }

    fn refined(&self, rhs: &[Complex64], adjoint: bool) -> Result<(Vec<Complex64>, SolveStats)> {
        let solve = |b: &mut [Complex64]| {
            if adjoint {
                self.lu.solve_transpose_in_place(b, true)
            } else {
                self.lu.solve_in_place(b)
            }
        };
        let bn = norm_c(rhs);
        let mut w = rhs.to_vec();
        solve(&mut w);
        let anorm = self.op.matrix.norm_inf() + self.z.norm();
        let mut r = self.residual(&w, rhs, adjoint);
        let mut rn = norm_c(&r);
        let mut steps = 0;
        while rn > 1e-10 * bn && steps < 3 {
            let mut d = r.clone();
            solve(&mut d);
            let cand: Vec<Complex64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
            let rc = self.residual(&cand, rhs, adjoint);
            let rcn = norm_c(&rc);
            steps += 1;
            if rcn >= rn {
                break;
            }
            w = cand;
            r = rc;
            rn = rcn;
        }
        let backward = rn / (anorm * norm_c(&w) + bn);
        if backward > 1e-8 {
            return Err(Error::RefinementStalled { backward });
        }
        Ok((w, SolveStats { relative_residual: rn / bn, backward_error: backward, refinements: steps }))
    }

    /// Solves `(A - z) w = rhs` with iterative refinement.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refined(rhs, false).map(|r| r.0)
    }

    pub fn solve_with_stats(&self, rhs: &[Complex64]) -> Result<(Vec<Complex64>, SolveStats)> {
        self.refined(rhs, false)
    }

    /// Solves `(A - z)^H w = rhs`.
    pub fn solve_adjoint(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.refined(rhs, true).map(|r| r.0)
    }

    /// Unrefined solve (inner loops of eigensolvers).
    pub fn solve_fast(&self, rhs: &mut [Complex64]) {
        self.lu.solve_in_place(rhs)
    }

    /// Unrefined `(A - z)^T` solve.
    pub fn solve_transpose_fast(&self, rhs: &mut [Complex64]) {
        self.lu.solve_transpose_in_place(rhs, false)
    }
}

/// `(A - z I) w = rhs`.
pub fn solve_shifted(op: &AssembledOperator, z: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    op.shifted(z)?.solve(rhs)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm_c(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
