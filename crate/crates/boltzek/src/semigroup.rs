//! Time integration of `u' = -(1/h) A u`, decay-rate fits and metastable plateaus.

use crate::banded::BandLu;
use crate::discretization::{norm, norm_c, to_complex, AssembledOperator};
use num_complex::Complex64;
use crate::ekformula::EKPrediction;
use crate::error::{Error, Result};
use crate::spectrum::SpectralResult;

/// Geometric time grid: one segment `[0, t_start]`, then decades
/// `[T, 10 T]` with `steps_per_decade` steps each, up to `t_end`.
#[derive(Clone, Copy, Debug)]
pub struct TimePolicy {
    pub t_start: f64,
    pub t_end: f64,
    pub steps_per_decade: usize,
}

impl TimePolicy {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self { t_start, t_end, steps_per_decade: 200 }
    }

    pub fn steps(mut self, spd: usize) -> Self {
        self.steps_per_decade = spd;
        self
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionRun {
    pub h: f64,
    /// Includes `t = 0`.
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// `distances[k - 1][i] = |u(t_i) - P_k u0|`.
    pub distances: Vec<Vec<f64>>,
    /// `max_t |P_1 u(t) - P_1 u0|`.
    pub kernel_drift: f64,
}

impl EvolutionRun {
    /// `|u(t)|` non-increasing up to `slack` (relative to `|u0|`).
    pub fn norm_monotone(&self, slack: f64) -> bool {
        let n0 = self.norms[0];
        self.norms.windows(2).all(|w| w[1] <= w[0] + slack * n0)
    }
}

struct Stepper {
    lu: BandLu<f64>,
    tau: f64,
}

impl Stepper {
    fn new(op: &AssembledOperator, dt: f64) -> Self {
        let tau = dt / (2.0 * op.h);
        Self { lu: op.implicit_factor(tau), tau }
    }

    /// Backward Euler over `dt / 2`.
    fn half_euler(&self, u: &mut [f64]) {
        self.lu.solve_in_place(u);
    }

    /// Crank-Nicolson over `dt`.
    fn crank_nicolson(&self, op: &AssembledOperator, u: &mut [f64]) {
        let au = op.apply(u);
        u.iter_mut().zip(&au).for_each(|(x, a)| *x -= self.tau * a);
        self.lu.solve_in_place(u);
    }
}

/// Evolves `u0`; distances are recorded against the first `nproj` spectral
/// projectors of `spectral` (none if `None`).
pub fn evolve(
    op: &AssembledOperator,
    u0: &[f64],
    spectral: Option<&SpectralResult>,
    nproj: usize,
    policy: &TimePolicy,
) -> Result<EvolutionRun> {
    if policy.steps_per_decade < 20 {
        return Err(Error::InvalidInput("need at least 20 steps per decade".into()));
    }
    if !(policy.t_start > 0.0 && policy.t_end > policy.t_start) {
        return Err(Error::InvalidInput("need 0 < t_start < t_end".into()));
    }
    let targets: Vec<Vec<f64>> = match spectral {
        Some(sr) => {
            let uc = to_complex(u0);
            (1..=nproj.min(sr.left.len())).map(|k| sr.project(k, &uc).iter().map(|z| z.re).collect()).collect()
        }
        None => Vec::new(),
    };
    let kernel = spectral.filter(|sr| !sr.left.is_empty()).map(|sr| (sr.left[0].clone(), sr.right[0].clone()));
    let c0 = kernel.as_ref().map(|(w, _)| w.iter().zip(u0).map(|(a, b)| a * b).sum::<Complex64>());

    let mut run = EvolutionRun { h: op.h, times: vec![0.0], norms: vec![norm(u0)], distances: vec![Vec::new(); targets.len()], kernel_drift: 0.0 };
    let record = |run: &mut EvolutionRun, t: f64, u: &[f64]| {
        run.times.push(t);
        run.norms.push(norm(u));
        for (k, p) in targets.iter().enumerate() {
            let d: f64 = u.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            run.distances[k].push(d);
        }
        if let (Some((w, v)), Some(c0)) = (&kernel, c0) {
            let c: Complex64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            run.kernel_drift = run.kernel_drift.max((c - c0).norm() * norm_c(v));
        }
    };
    for (k, p) in targets.iter().enumerate() {
        let d = u0.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        run.distances[k].push(d);
    }

    let mut segments = vec![(0.0, policy.t_start, policy.t_start / 20.0)];
    let mut t0 = policy.t_start;
    while t0 < policy.t_end * (1.0 - 1e-12) {
        let t1 = (10.0 * t0).min(policy.t_end);
        segments.push((t0, t1, 9.0 * t0 / policy.steps_per_decade as f64));
        t0 = t1;
    }
    let mut u = u0.to_vec();
    let mut t = 0.0;
    for (_, end, dt) in segments {
        let st = Stepper::new(op, dt);
        let mut first = true;
        while t < end - 1e-9 * dt {
            if first {
                st.half_euler(&mut u);
                st.half_euler(&mut u);
                first = false;
            } else {
                st.crank_nicolson(op, &mut u);
            }
            t += dt;
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::SolverFailure(format!("non-finite state at t = {t:e}")));
            }
            record(&mut run, t, &u);
        }
    }
    Ok(run)
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    /// Fitted `r` in `d_1(t) ~ e^{-r t}`.
    pub rate: f64,
    /// `rate * h`, comparable with `Re lambda`.
    pub rate_times_h: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

fn fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let sty: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let slope = sty / stt;
    let icpt = my - slope * mt;
    let res = (ts.iter().zip(ys).map(|(t, y)| (y - icpt - slope * t).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, res)
}

/// Log-linear least squares of `d_1` over `window`, or over the samples with
/// `d_1 / d_1(0)` in `[1e-9, 1e-3]` when `window` is `None`.
pub fn decay_rate(run: &EvolutionRun, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let d = run.distances.first().ok_or_else(|| Error::InsufficientWindow("no projector distances recorded".into()))?;
    let d0 = d[0];
    let pick = |i: usize| match window {
        Some((a, b)) => run.times[i] >= a && run.times[i] <= b && d[i] > 0.0,
        None => d[i] <= 1e-3 * d0 && d[i] >= 1e-9 * d0,
    };
    let idx: Vec<usize> = (0..d.len()).filter(|&i| pick(i)).collect();
    if idx.len() < 10 {
        return Err(Error::InsufficientWindow(format!("{} samples in window", idx.len())));
    }
    let ts: Vec<f64> = idx.iter().map(|&i| run.times[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| d[i].ln()).collect();
    let drop = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ys.iter().copied().fold(f64::INFINITY, f64::min);
    if drop < 3.0 * std::f64::consts::LN_10 {
        return Err(Error::InsufficientWindow(format!("amplitude drops by {:.2} decades, need 3", drop / std::f64::consts::LN_10)));
    }
    let (slope, _, residual) = fit(&ts, &ys);
    Ok(DecayFit {
        rate: -slope,
        rate_times_h: -slope * run.h,
        residual,
        window: (ts[0], *ts.last().unwrap()),
        samples: ts.len(),
    })
}

#[derive(Clone, Debug)]
pub struct PlateauRow {
    pub k: usize,
    /// First interval `[start, end]` spanning a decade with `d_k` below threshold.
    pub interval: Option<(f64, f64)>,
    /// `h / lambda_EK` of the mode whose decay opens plateau `k`.
    pub predicted_timescale: Option<f64>,
}

impl PlateauRow {
    pub fn onset(&self) -> Option<f64> {
        self.interval.map(|i| i.0)
    }
}

/// Plateau detection with threshold `threshold * |u0|`; `preds` sorted in any
/// order.
pub fn plateau_report(run: &EvolutionRun, preds: &[EKPrediction<f64>], threshold: f64) -> Vec<PlateauRow> {
    let mut lams: Vec<f64> = preds.iter().map(|p| p.lambda(run.h)).collect();
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = threshold * run.norms[0];
    run.distances
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let k = i + 1;
            let mut interval = None;
            let mut start: Option<usize> = None;
            for j in 1..=d.len() {
                let below = j < d.len() && d[j] < tol;
                match (below, start) {
                    (true, None) => start = Some(j),
                    (false, Some(s)) => {
                        let (a, b) = (run.times[s], run.times[j - 1]);
                        if a > 0.0 && b >= 10.0 * a {
                            interval = Some((a, b));
                            break;
                        }
                        start = None;
                    }
                    _ => {}
                }
            }
            PlateauRow { k, interval, predicted_timescale: lams.get(k - 1).map(|l| run.h / l) }
        })
        .collect()
}

/// Fails with `NoPlateauDetected` for the first row without a plateau.
pub fn require_plateaus(rows: &[PlateauRow]) -> Result<()> {
    match rows.iter().find(|r| r.interval.is_none()) {
        Some(r) => Err(Error::NoPlateauDetected { k: r.k }),
        None => Ok(()),
    }
}
