//! Stage execution, artifacts and the check summary.

use crate::config::{CollisionSpec, PotentialSpec, RunConfig, Stage};
use crate::error::{CliError, CliResult};
use boltzek::collision::{coercivity_violation, CollisionKind, CollisionModel, RateFunction};
use boltzek::discretization::{assemble, AssembledOperator, GridSpec};
use boltzek::ekformula::{predict, select_lambda_star, EKPrediction};
use boltzek::landscape::{analyze, lift_check_w, Labeling};
use boltzek::potential::{builtin, tilted_double_well_2d, Potential};
use boltzek::quasimode::{build_quasimode, rayleigh_quotient, QuasimodeParams};
use boltzek::semigroup::{decay_rate, evolve, plateau_report, TimePolicy};
use boltzek::spectrum::{match_predictions, resolvent_probe, small_eigenvalues, EigenOptions, SpectralResult};
use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value as ExprValue};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub h: Option<f64>,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, h: Option<f64>, passed: bool, measured: f64, bound: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), h, passed, measured, bound, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Write only the summary file.
    pub summary_only: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub summary: Value,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn build_potential(spec: &PotentialSpec) -> CliResult<Box<dyn Potential<f64>>> {
    if let Some(c) = &spec.coefficients {
        let [lo, hi] = spec.window.ok_or_else(|| CliError::config("potential.window", "required with coefficients"))?;
        return Ok(Box::new(boltzek::Poly1D::new(c.clone(), lo, hi)));
    }
    let name = spec.builtin.as_deref().unwrap_or_default();
    if name == "tilted_double_well_2d" {
        if spec.window.is_some() {
            return Err(CliError::config("potential.window", "not supported for two-dimensional builtins"));
        }
        return Ok(Box::new(tilted_double_well_2d::<f64>()));
    }
    let p = builtin::<f64>(name).map_err(|e| CliError::config("potential.builtin", e.to_string()))?;
    Ok(Box::new(match spec.window {
        Some([lo, hi]) => p.with_window(lo, hi),
        None => p,
    }))
}

fn expression_rate(expr: &str) -> CliResult<RateFunction<f64>> {
    let node = build_operator_tree::<DefaultNumericTypes>(expr).map_err(|e| CliError::config("collision.rho", e.to_string()))?;
    let eval = move |t: f64| {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        if ctx.set_value("t".into(), ExprValue::Float(t)).is_err() {
            return f64::NAN;
        }
        node.eval_number_with_context(&ctx).unwrap_or(f64::NAN)
    };
    for t in [0.0, 0.5, 1.0, 10.0] {
        let v = eval(t);
        if !v.is_finite() {
            return Err(CliError::config("collision.rho", format!("expression is not finite at t = {t}")));
        }
    }
    if eval(0.0).abs() > 1e-12 {
        return Err(CliError::config("collision.rho", "rate must vanish at t = 0"));
    }
    Ok(RateFunction::custom(Arc::new(eval)))
}

pub fn build_collision(spec: &CollisionSpec, dim: usize) -> CliResult<CollisionModel<f64>> {
    if let Some(rows) = &spec.m0 {
        if rows.len() != dim {
            return Err(CliError::config("collision.m0", format!("expected a {dim}x{dim} matrix")));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j] * spec.scale);
        return CollisionModel::constant_matrix(m).map_err(|e| CliError::config("collision.m0", e.to_string()));
    }
    let rate = match spec.rho.as_str() {
        "mild_relaxation" => RateFunction::mild_relaxation_scaled(spec.scale),
        "linear" => RateFunction::linear_scaled(spec.scale),
        expr => {
            let scale = spec.scale;
            let base = expression_rate(expr)?;
            if scale == 1.0 {
                base
            } else {
                RateFunction::custom(Arc::new(move |t| scale * base.rho(t)))
            }
        }
    };
    Ok(CollisionModel::bgk(rate, dim))
}

fn cp_json(location: &[f64], value: f64) -> Value {
    json!({ "location": location, "value": value })
}

fn labeling_json(lab: &Labeling<f64>) -> Value {
    let minima: Vec<Value> = lab
        .minima
        .iter()
        .map(|m| {
            json!({
                "location": m.point.location,
                "value": m.point.value,
                "k": m.k,
                "j": m.j,
                "sigma": m.sigma,
                "s": m.s,
                "saddles": m.saddles.iter().map(|&i| lab.saddles[i].point.location.clone()).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "n0": lab.n0(),
        "minima": minima,
        "separating_values": lab.separating_values,
        "saddles": lab.saddles.iter().map(|s| cp_json(&s.point.location, s.point.value)).collect::<Vec<_>>(),
        "quantum": lab.quantum,
    })
}

fn predictions_json(preds: &[EKPrediction<f64>], h_list: &[f64]) -> Value {
    let star = select_lambda_star(preds).ok().map(|s| s.minimum.location.clone());
    let rows: Vec<Value> = preds
        .iter()
        .map(|p| {
            json!({
                "minimum": p.minimum.location,
                "k": p.k,
                "j": p.j,
                "s": p.s,
                "barrier": p.barrier,
                "det_hess_m": p.det_hess_m,
                "prefactor": p.prefactor,
                "saddles": p.saddles.iter().map(|t| json!({
                    "location": t.location,
                    "value": t.value,
                    "det_hess": t.det_hess,
                    "alpha0": t.alpha0,
                    "term": t.term,
                })).collect::<Vec<_>>(),
                "lambda": h_list.iter().map(|&h| json!({ "h": h, "lambda": p.lambda(h) })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "predictions": rows, "lambda_star_minimum": star })
}

/// Everything computed for one `h`.
struct HRun {
    h: f64,
    spectral: Option<SpectralResult>,
    ratios: Vec<f64>,
    resolvent: Vec<(f64, f64, f64)>,
    quasimode: Vec<QuasimodeRow>,
    quasimode_plot: Vec<(usize, f64, f64, f64)>,
    semigroup: Option<SemigroupRow>,
    checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
struct QuasimodeRow {
    minimum: Vec<f64>,
    rq: f64,
    rq_ratio: f64,
    continuum_ratio: f64,
    normalization: f64,
    transport_relative: f64,
}

#[derive(Clone, Debug, Serialize)]
struct SemigroupRow {
    t_end: f64,
    rate_times_h: Option<f64>,
    rate_ratio: Option<f64>,
    plateau_onsets: Vec<Option<f64>>,
    kernel_drift: f64,
    #[serde(skip)]
    series: Vec<(f64, f64, Vec<f64>)>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    p: &'a dyn Potential<f64>,
    model: &'a CollisionModel<f64>,
    lab: &'a Labeling<f64>,
    preds: &'a [EKPrediction<f64>],
}

impl Context<'_> {
    fn operator(&self, h: f64) -> CliResult<AssembledOperator> {
        let g = &self.cfg.grid;
        let mut spec = GridSpec::new(g.nx, g.n_hermite).scheme(g.scheme);
        if let Some([lo, hi]) = g.window {
            spec = spec.window(lo, hi);
        }
        assemble(self.p, self.model, h, &spec).map_err(CliError::stage("spectrum", Some(h)))
    }

    fn run_h(&self, h: f64) -> CliResult<HRun> {
        let cfg = self.cfg;
        let tol = &cfg.tolerances;
        let n0 = self.lab.n0();
        let mut out = HRun {
            h,
            spectral: None,
            ratios: Vec::new(),
            resolvent: Vec::new(),
            quasimode: Vec::new(),
            quasimode_plot: Vec::new(),
            semigroup: None,
            checks: Vec::new(),
        };
        let needs_op = cfg.has(Stage::Spectrum) || cfg.has(Stage::Quasimode);
        let op = if needs_op { Some(self.operator(h)?) } else { None };

        if let (true, Some(op)) = (cfg.has(Stage::Spectrum), &op) {
            let mut opts = EigenOptions::new(cfg.spectrum.count.unwrap_or(n0 + 2).max(n0 + 1), h);
            opts.tol = cfg.spectrum.tol;
            opts.seed = cfg.seed;
            let sr = small_eigenvalues(op, &opts).map_err(CliError::stage("spectrum", Some(h)))?;
            let count = sr.count_in_strip(cfg.spectrum.c);
            out.checks.push(Check::new("strip_count", Some(h), count == n0, count as f64, n0 as f64, "eigenvalues with Re z <= c h^2"));
            let k = sr.eigenvalues[0].norm() / sr.norm_a;
            out.checks.push(Check::new("kernel_eigenvalue", Some(h), k <= tol.kernel, k, tol.kernel, "|lambda_0| / |A|"));
            let min_re = sr.eigenvalues[1..].iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            out.checks.push(Check::new("nonzero_real_part", Some(h), min_re > 0.0, min_re, 0.0, "smallest Re of nonzero eigenvalues"));
            if count == n0 {
                let rows = match_predictions(&sr, self.preds, cfg.spectrum.c, tol.ek_ratio).map_err(CliError::stage("spectrum", Some(h)))?;
                out.ratios = rows.iter().map(|r| r.ratio).collect();
            }
            if cfg.spectrum.resolvent_samples > 0 {
                let probe = resolvent_probe(op, h, cfg.spectrum.c, cfg.spectrum.ctilde, cfg.spectrum.resolvent_samples)
                    .map_err(CliError::stage("spectrum", Some(h)))?;
                out.resolvent = probe.iter().map(|r| (r.z.re, r.z.im, r.scaled)).collect();
            }
            out.spectral = Some(sr);
        }

        if let (true, Some(op)) = (cfg.has(Stage::Quasimode), &op) {
            let qc = &cfg.quasimode;
            let params = QuasimodeParams { gamma_factor: qc.gamma_factor, levels: qc.levels, gh_nodes: qc.gh_nodes, ..Default::default() };
            for (idx, m) in self.lab.minima.iter().enumerate().skip(1) {
                let q = build_quasimode(self.p, self.lab, self.model, idx, h, params.clone()).map_err(CliError::stage("quasimode", Some(h)))?;
                let r = rayleigh_quotient(&q, op, self.model).map_err(CliError::stage("quasimode", Some(h)))?;
                let pred = self.preds.iter().find(|p| p.minimum.location == m.point.location).map(|p| p.lambda(h)).unwrap_or(f64::NAN);
                out.checks.push(Check::new("quasimode_transport", Some(h), r.transport_relative <= tol.transport, r.transport_relative, tol.transport, "<X f, f> / <f, f>"));
                out.quasimode.push(QuasimodeRow {
                    minimum: m.point.location.clone(),
                    rq: r.discrete,
                    rq_ratio: r.discrete / pred,
                    continuum_ratio: r.continuum / pred,
                    normalization: r.normalization,
                    transport_relative: r.transport_relative,
                });
                let w = self.p.window();
                let vmax = 4.0 * h.sqrt();
                for i in 0..qc.plot_nx {
                    let x = w.lo[0] + (w.hi[0] - w.lo[0]) * i as f64 / (qc.plot_nx.max(2) - 1) as f64;
                    for j in 0..qc.plot_nv {
                        let v = -vmax + 2.0 * vmax * j as f64 / (qc.plot_nv.max(2) - 1) as f64;
                        out.quasimode_plot.push((idx, x, v, q.value(x, v)));
                    }
                }
            }
        }

        if cfg.has(Stage::Semigroup) {
            let op = op.as_ref().expect("spectrum stage assembles the operator");
            let sr = out.spectral.as_ref().expect("spectrum stage ran");
            out.semigroup = Some(self.semigroup(op, sr, h, &mut out.checks)?);
        }
        Ok(out)
    }

    fn semigroup(&self, op: &AssembledOperator, sr: &SpectralResult, h: f64, checks: &mut Vec<Check>) -> CliResult<SemigroupRow> {
        let cfg = &self.cfg.semigroup;
        let tol = &self.cfg.tolerances;
        let n0 = self.lab.n0();
        // start in the basin of the fastest metastable minimum
        let target = self
            .lab
            .non_global()
            .min_by(|a, b| a.s.partial_cmp(&b.s).unwrap())
            .ok_or_else(|| CliError::config("potential", "semigroup stage needs a non-global minimum"))?;
        let xm = target.point.location[0];
        let lo = self.lab.saddles.iter().map(|s| s.point.location[0]).filter(|&x| x < xm).fold(f64::NEG_INFINITY, f64::max);
        let hi = self.lab.saddles.iter().map(|s| s.point.location[0]).filter(|&x| x > xm).fold(f64::INFINITY, f64::min);
        let u0 = op.level0_profile(target.point.value, |x| x > lo && x < hi);
        let lam1 = sr.eigenvalues[1].re;
        let t_start = cfg.t_start.unwrap_or(h);
        let t_end = cfg.t_end.unwrap_or(100.0 * h / lam1);
        let policy = TimePolicy::new(t_start, t_end).steps(cfg.steps_per_decade);
        let nproj = n0.min(sr.left.len());
        let run = evolve(op, &u0, Some(sr), nproj, &policy).map_err(CliError::stage("semigroup", Some(h)))?;

        let (rate_times_h, rate_ratio) = match decay_rate(&run, None) {
            Ok(fit) => {
                let r = fit.rate_times_h / lam1;
                checks.push(Check::new("decay_rate", Some(h), (r - 1.0).abs() <= tol.rate_band, r, tol.rate_band, "fitted rate * h / lambda_1"));
                (Some(fit.rate_times_h), Some(r))
            }
            Err(e) => {
                checks.push(Check::new("decay_rate", Some(h), false, f64::NAN, tol.rate_band, e.to_string()));
                (None, None)
            }
        };
        let mono = run.norm_monotone(1e-12);
        checks.push(Check::new("norm_monotone", Some(h), mono, f64::from(u8::from(mono)), 1.0, "|u(t)| non-increasing"));
        checks.push(Check::new("kernel_drift", Some(h), run.kernel_drift <= tol.kernel_drift, run.kernel_drift, tol.kernel_drift, "kernel coefficient drift"));
        let rows = plateau_report(&run, self.preds, cfg.plateau_threshold);
        let plateaus = rows.iter().filter(|r| r.interval.is_some()).count();
        let need = n0.saturating_sub(1);
        checks.push(Check::new("plateaus", Some(h), plateaus >= need, plateaus as f64, need as f64, "metastable plateaus detected"));
        if n0 >= 3 && self.preds.len() >= 2 {
            let (s1, s2) = (self.preds[0].s, self.preds[1].s);
            let predicted = (2.0 * (s1 - s2) / h).exp();
            let observed = match (rows[0].onset(), rows[1].onset()) {
                (Some(a), Some(b)) => a / b,
                _ => f64::NAN,
            };
            let band = observed / predicted;
            checks.push(Check::new("timescale_ordering", Some(h), (0.1..=10.0).contains(&band), band, 10.0, "onset ratio / exp(2 dS / h)"));
        }
        let series = (0..run.times.len()).map(|i| (run.times[i], run.norms[i], run.distances.iter().map(|d| d[i]).collect())).collect();
        Ok(SemigroupRow {
            t_end,
            rate_times_h,
            rate_ratio,
            plateau_onsets: rows.iter().map(|r| r.onset()).collect(),
            kernel_drift: run.kernel_drift,
            series,
        })
    }
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v)?;
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(f))
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Runs the enabled stages; artifacts and `summary.json` go to `cfg.output`.
pub fn run(cfg: &RunConfig, opts: RunOptions) -> CliResult<RunReport> {
    cfg.validate()?;
    let out_dir = &cfg.output;
    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let mut files = Vec::new();
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    let emit = |stage: Stage, files: &mut Vec<PathBuf>| -> Option<PathBuf> {
        if opts.summary_only {
            return None;
        }
        let path = out_dir.join(stage.artifact());
        files.push(path.clone());
        Some(path)
    };

    let p = build_potential(&cfg.potential)?;
    let d = p.dim();
    if d != 1 && cfg.stages.iter().any(|s| *s > Stage::Predict) {
        return Err(CliError::config("stages", "spectrum, quasimode and semigroup need a one-dimensional potential"));
    }
    let res = cfg.potential.resolution.unwrap_or(if d == 1 { 2000 } else { 160 });
    let lab = analyze(p.as_ref(), 64, res).map_err(CliError::stage("landscape", None))?;
    if d == 1 {
        let lift = lift_check_w(p.as_ref(), &lab, 600);
        let detail = match &lift {
            Ok(r) => format!("{} separating values agree", r.w_values.len()),
            Err(e) => e.to_string(),
        };
        checks.push(Check::new("w_lift", None, lift.is_ok(), f64::from(u8::from(lift.is_ok())), 1.0, detail));
    }
    let lab_json = labeling_json(&lab);
    if let Some(path) = emit(Stage::Landscape, &mut files) {
        write_json(&path, &lab_json)?;
    }
    results.insert("labeling".into(), lab_json);

    if !cfg.has(Stage::Predict) {
        return finish(cfg, results, checks, files);
    }
    let model = build_collision(&cfg.collision, d)?;
    let c = cfg.collision.coercivity;
    checks.push(Check::new("collision_valid", None, model.is_valid(c), model.m0_floor(), 1.0 / c, "smallest eigenvalue of M_0 against 1/C"));
    if matches!(model.kind, CollisionKind::Bgk(_)) {
        for &h in &cfg.h_list {
            let v = coercivity_violation(&model, h, cfg.collision.check_levels, c).map_err(CliError::stage("predict", Some(h)))?;
            checks.push(Check::new("coercivity", Some(h), v.is_none(), v.map_or(0.0, |n| n as f64), 0.0, "first Hermite level violating the lower bounds"));
        }
    }
    let preds = predict(&lab, &model).map_err(CliError::stage("predict", None))?;
    let pj = predictions_json(&preds, &cfg.h_list);
    if let Some(path) = emit(Stage::Predict, &mut files) {
        write_json(&path, &pj)?;
    }
    results.insert("predictions".into(), pj);

    if !cfg.stages.iter().any(|s| *s > Stage::Predict) {
        return finish(cfg, results, checks, files);
    }
    let ctx = Context { cfg, p: p.as_ref(), model: &model, lab: &lab, preds: &preds };
    let runs: Vec<HRun> = cfg.h_list.par_iter().map(|&h| ctx.run_h(h)).collect::<CliResult<_>>()?;
    for r in &runs {
        checks.extend(r.checks.iter().cloned());
    }
    let smallest = runs.last().expect("h_list is nonempty");

    if cfg.has(Stage::Spectrum) {
        let npred = preds.len();
        for i in 0..npred {
            let errs: Vec<f64> = runs.iter().filter_map(|r| r.ratios.get(i)).map(|x| (x - 1.0).abs()).collect();
            if errs.len() == runs.len() {
                if errs.len() >= 2 {
                    let dec = errs.windows(2).all(|w| w[1] < w[0]);
                    checks.push(Check::new("ek_ratio_trend", None, dec, errs[errs.len() - 1], errs[0], format!("|ratio - 1| decreasing for prediction {i}")));
                }
                let last = errs[errs.len() - 1];
                checks.push(Check::new("ek_ratio_band", Some(smallest.h), last <= cfg.tolerances.ek_ratio, last, cfg.tolerances.ek_ratio, format!("prediction {i}")));
            }
        }
        let maxima: Vec<f64> = runs.iter().filter(|r| !r.resolvent.is_empty()).map(|r| r.resolvent.iter().map(|x| x.2).fold(0.0, f64::max)).collect();
        if maxima.len() >= 2 {
            let s = spread(&maxima);
            checks.push(Check::new("resolvent_spread", None, s <= cfg.tolerances.resolvent_spread, s, cfg.tolerances.resolvent_spread, "max/min of h^2 |R| across h"));
        }
        if let Some(path) = emit(Stage::Spectrum, &mut files) {
            let mut w = csv_writer(&path)?;
            w.write_record(["h", "kind", "index", "re", "im", "value"])?;
            for r in &runs {
                let sr = r.spectral.as_ref().expect("spectrum stage ran");
                for (k, z) in sr.eigenvalues.iter().enumerate() {
                    w.serialize((r.h, "eigenvalue", k, z.re, z.im, sr.residuals[k]))?;
                }
                for (k, ratio) in r.ratios.iter().enumerate() {
                    w.serialize((r.h, "ek_ratio", k, ratio, 0.0, preds[k].lambda(r.h)))?;
                }
                for (k, (re, im, s)) in r.resolvent.iter().enumerate() {
                    w.serialize((r.h, "resolvent", k, re, im, s))?;
                }
            }
            w.flush().map_err(CliError::io(&path))?;
        }
        let rows: Vec<Value> = runs
            .iter()
            .map(|r| {
                let sr = r.spectral.as_ref().expect("spectrum stage ran");
                json!({
                    "h": r.h,
                    "eigenvalues": sr.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "residuals": sr.residuals,
                    "ek_ratios": r.ratios,
                    "resolvent_max": r.resolvent.iter().map(|x| x.2).fold(0.0, f64::max),
                })
            })
            .collect();
        results.insert("spectrum".into(), Value::Array(rows));
    }

    if cfg.has(Stage::Quasimode) {
        let nmin = smallest.quasimode.len();
        for i in 0..nmin {
            let errs: Vec<f64> = runs.iter().map(|r| (r.quasimode[i].rq_ratio - 1.0).abs()).collect();
            if errs.len() >= 2 {
                let dec = errs.windows(2).all(|w| w[1] < w[0]);
                checks.push(Check::new("quasimode_trend", None, dec, errs[errs.len() - 1], errs[0], format!("|RQ ratio - 1| decreasing for minimum {}", i + 1)));
            }
            let last = errs[errs.len() - 1];
            let band = cfg.tolerances.quasimode_band;
            checks.push(Check::new("quasimode_band", Some(smallest.h), last <= band, last, band, format!("|RQ / lambda_EK - 1| for minimum {}", i + 1)));
        }
        if let Some(path) = emit(Stage::Quasimode, &mut files) {
            let mut w = csv_writer(&path)?;
            w.write_record(["h", "minimum", "x", "v", "f"])?;
            for r in &runs {
                for &(idx, x, v, f) in &r.quasimode_plot {
                    w.serialize((r.h, idx, x, v, f))?;
                }
            }
            w.flush().map_err(CliError::io(&path))?;
        }
        let rows: Vec<Value> = runs.iter().map(|r| json!({ "h": r.h, "minima": r.quasimode })).collect();
        results.insert("quasimode".into(), Value::Array(rows));
    }

    if cfg.has(Stage::Semigroup) {
        if let Some(path) = emit(Stage::Semigroup, &mut files) {
            let n0 = lab.n0();
            let mut w = csv_writer(&path)?;
            let mut header = vec!["h".to_string(), "t".into(), "norm".into()];
            header.extend((1..=n0).map(|k| format!("d_{k}")));
            w.write_record(&header)?;
            for r in &runs {
                let sg = r.semigroup.as_ref().expect("semigroup stage ran");
                for (t, norm, ds) in &sg.series {
                    let mut rec = vec![r.h.to_string(), t.to_string(), norm.to_string()];
                    rec.extend((0..n0).map(|k| ds.get(k).map(|x| x.to_string()).unwrap_or_default()));
                    w.write_record(&rec)?;
                }
            }
            w.flush().map_err(CliError::io(&path))?;
        }
        let rows: Vec<Value> = runs.iter().map(|r| json!({ "h": r.h, "run": r.semigroup })).collect();
        results.insert("semigroup".into(), Value::Array(rows));
    }
    finish(cfg, results, checks, files)
}

fn finish(cfg: &RunConfig, results: serde_json::Map<String, Value>, checks: Vec<Check>, mut files: Vec<PathBuf>) -> CliResult<RunReport> {
    let passed = checks.iter().all(|c| c.passed);
    let summary = json!({
        "version": crate::config::CONFIG_VERSION,
        "config": cfg,
        "stages": cfg.ordered_stages(),
        "files": files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "results": results,
        "checks": checks,
        "passed": passed,
    });
    let path = cfg.output.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(RunReport { summary, checks, files })
}
