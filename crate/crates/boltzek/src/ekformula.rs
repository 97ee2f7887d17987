//! Leading-order Eyring-Kramers eigenvalues from labeling and saddle data.

use crate::collision::{m0_at_rest, CollisionModel};
use crate::error::{Error, Result};
use crate::landscape::{CriticalPoint, Labeling};
use crate::saddledyn::{phi_eigenproblem, SaddleData};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SaddleTerm<T: Real> {
    pub location: Vec<T>,
    pub value: T,
    pub det_hess: T,
    pub alpha0: T,
    /// `|det Hess_s V|^{-1/2} alpha0`.
    pub term: T,
}

#[derive(Clone, Debug)]
pub struct EKPrediction<T: Real> {
    pub minimum: CriticalPoint<T>,
    pub k: usize,
    pub j: usize,
    /// `S(m)`, on the `V/2` scale.
    pub s: T,
    /// `V(s) - V(m) = 2 S(m)`.
    pub barrier: T,
    pub det_hess_m: T,
    pub prefactor: T,
    pub saddles: Vec<SaddleTerm<T>>,
}

impl<T: Real> EKPrediction<T> {
    /// `h e^{-2S/h} det(Hess_m V)^{1/2} / (2 pi) * prefactor`.
    pub fn lambda(&self, h: T) -> T {
        h * (-(self.s * T::c(2.0)) / h).exp() * self.det_hess_m.sqrt() / T::two_pi() * self.prefactor
    }

    /// `log(lambda(h)) + 2S/h - log(h)`, independent of `h`.
    pub fn log_shape(&self, h: T) -> T {
        self.lambda(h).ln() + self.s * T::c(2.0) / h - h.ln()
    }
}

/// One prediction per non-global minimum, sorted by `S` descending.
pub fn predict<T: Real>(lab: &Labeling<T>, model: &CollisionModel<T>) -> Result<Vec<EKPrediction<T>>> {
    let m0 = m0_at_rest(model);
    let mut out = Vec::new();
    for m in lab.non_global() {
        let s = m.s.expect("non-global minimum has finite S");
        let mut terms = Vec::new();
        for &si in &m.saddles {
            let sp = &lab.saddles[si].point;
            let wrap = |e: Error| Error::Saddle {
                minimum: m.point.location_f64(),
                location: sp.location_f64(),
                source: Box::new(e),
            };
            let sd = SaddleData::new(sp.location.clone(), sp.hessian.clone(), m0.clone()).map_err(wrap)?;
            let pf = phi_eigenproblem(&sd).map_err(wrap)?;
            let det = sp.hessian.determinant();
            terms.push(SaddleTerm {
                location: sp.location.clone(),
                value: sp.value,
                det_hess: det,
                alpha0: pf.alpha0,
                term: pf.alpha0 / det.abs().sqrt(),
            });
        }
        let prefactor = terms.iter().fold(T::zero(), |acc, t| acc + t.term);
        out.push(EKPrediction {
            minimum: m.point.clone(),
            k: m.k,
            j: m.j,
            s,
            barrier: s * T::c(2.0),
            det_hess_m: m.point.hessian.determinant(),
            prefactor,
            saddles: terms,
        });
    }
    out.sort_by(|a, b| b.s.partial_cmp(&a.s).unwrap());
    Ok(out)
}

/// Prediction with maximal `S`; ties broken by the smaller
/// `prefactor * det(Hess_m V)^{1/2}`.
pub fn select_lambda_star<T: Real>(preds: &[EKPrediction<T>]) -> Result<&EKPrediction<T>> {
    let first = preds.first().ok_or_else(|| Error::InvalidInput("no predictions".into()))?;
    let tol = T::tol(1e-12);
    let key2 = |p: &EKPrediction<T>| p.prefactor * p.det_hess_m.sqrt();
    let close = |a: T, b: T| (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()));
    let mut best = first;
    let mut tie = false;
    for p in &preds[1..] {
        if close(p.s, best.s) {
            if close(key2(p), key2(best)) {
                tie = true;
            } else if key2(p) < key2(best) {
                best = p;
                tie = false;
            }
        } else if p.s > best.s {
            best = p;
            tie = false;
        }
    }
    if tie {
        return Err(Error::AmbiguousLambdaStar);
    }
    Ok(best)
}
