use boltzek::collision::{coercivity_violation, q_hermite_diagonal, CollisionModel, RateFunction};
use boltzek::discretization::{assemble, GridSpec};
use boltzek::ekformula::predict;
use boltzek::landscape::{analyze, energy_quantum, find_critical_points, half_values, lift_check_analysis, lift_check_w, separating_saddles, Grid};
use boltzek::potential::{double_well, tilted_double_well, tilted_double_well_2d, triple_well, Potential};
use boltzek::quadrature::{constant_spread, laplace_check, laplace_ratio};
use boltzek::quasimode::{build_quasimode, rayleigh_quotient, QuasimodeParams};
use boltzek::saddledyn::{bgk_closed_form, phi_eigenproblem};
use boltzek::semigroup::{decay_rate, evolve, plateau_report, TimePolicy};
use boltzek::spectrum::{match_predictions, resolvent_probe, small_eigenvalues, EigenOptions};
use boltzek::SaddleData64;
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

mod common;
use common::{minimax, s_oracle_rows, Lattice};

type Outcome = Result<String, String>;

const TILTED_H: [f64; 3] = [0.2, 0.1, 0.05];
const NX: usize = 400;
const NH: usize = 30;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn prefactor_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut worst_rel, mut worst_det) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let mu = rng.random_range(-10.0..-0.01);
        let rp = rng.random_range(0.05..20.0);
        let d = rng.random_range(1..=2usize);
        let mut hess = DMatrix::identity(d, d) * rng.random_range(0.1..10.0);
        hess[(0, 0)] = mu;
        if d == 2 {
            let a: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let r = DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
            hess = &r * hess * r.transpose();
            hess = (&hess + hess.transpose()) * 0.5;
        }
        let sd = SaddleData64::new(vec![0.0; d], hess, DMatrix::identity(d, d) * rp).map_err(|e| e.to_string())?;
        let pf = phi_eigenproblem(&sd).map_err(|e| e.to_string())?;
        let (a, _) = bgk_closed_form(mu, rp);
        worst_rel = worst_rel.max((pf.alpha0 - a).abs() / a);
        worst_det = worst_det.max(pf.det_identity_residual);
    }
    check(worst_rel <= 1e-10 && worst_det <= 1e-8, format!("200 draws, max rel alpha0 error {worst_rel:.2e}, max det residual {worst_det:.2e}"))
}

fn landscape_oracle() -> Outcome {
    let mut notes = Vec::new();
    for (name, p, res) in [
        ("tilted", Box::new(tilted_double_well::<f64>()) as Box<dyn Potential<f64>>, 2000),
        ("triple", Box::new(triple_well::<f64>()), 2000),
        ("2d", Box::new(tilted_double_well_2d::<f64>()), 160),
    ] {
        for (s, oracle, q) in s_oracle_rows(p.as_ref(), res) {
            if (s - oracle).abs() > 2.0 * q {
                return Err(format!("{name}: S {s} vs oracle {oracle} (quantum {q:.1e})"));
            }
            notes.push(format!("{name} S={s:.5}"));
        }
    }
    for (name, p) in [("tilted", tilted_double_well::<f64>()), ("triple", triple_well::<f64>())] {
        let lab = analyze(&p, 64, 2000).map_err(|e| e.to_string())?;
        lift_check_w(&p, &lab, 600).map_err(|e| format!("{name} W-lift: {e}"))?;
    }
    // symmetric wells admit no adapted labeling; compare the separating value directly
    let p = double_well::<f64>();
    let crit = find_critical_points(&p, 64).map_err(|e| e.to_string())?;
    let sad = separating_saddles(&p, &crit, 2000).map_err(|e| e.to_string())?;
    let lat = Lattice::new(&p, 2000);
    let half: Vec<f64> = (0..lat.len()).map(|k| 0.5 * p.value(&lat.point(k))).collect();
    let sigma = minimax(&lat, &half, lat.nearest(&[-1.0]), &[lat.nearest(&[1.0])]);
    let grid = Grid::new(p.window(), 2000);
    let q = energy_quantum(&grid, &half_values(&p, &grid), sad.values[0]);
    if (sad.values[0] - sigma).abs() > 2.0 * q {
        return Err(format!("double well: separating value {} vs oracle {sigma}", sad.values[0]));
    }
    lift_check_analysis(&p, &sad, 600).map_err(|e| format!("double W-lift: {e}"))?;
    notes.push(format!("double S={:.5}", sad.values[0]));
    Ok(notes.join(", "))
}

fn eigenvalue_asymptotics() -> Outcome {
    let p = tilted_double_well::<f64>();
    let model = CollisionModel::mild_relaxation(1);
    let lab = analyze(&p, 64, 2000).map_err(|e| e.to_string())?;
    let preds = predict(&lab, &model).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    let mut notes = Vec::new();
    for h in TILTED_H {
        let op = assemble(&p, &model, h, &GridSpec::new(NX, NH)).map_err(|e| e.to_string())?;
        let sr = small_eigenvalues(&op, &EigenOptions::new(4, h)).map_err(|e| e.to_string())?;
        let rows = match_predictions(&sr, &preds, 1.5, 0.25).map_err(|e| e.to_string())?;
        let lam = rows[0].lambda_numeric;
        if !(lam.re > 0.0 && lam.im.abs() <= 1e-10 * lam.re) {
            return Err(format!("h {h}: eigenvalue {lam} not real positive"));
        }
        errs.push((rows[0].ratio - 1.0).abs());
        notes.push(format!("h={h} ratio={:.4}", rows[0].ratio));
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    check(decreasing && errs[2] <= 0.25, notes.join(", "))
}

fn rayleigh_quotient_check() -> Outcome {
    let p = tilted_double_well::<f64>();
    let model = CollisionModel::mild_relaxation(1);
    let lab = analyze(&p, 64, 2000).map_err(|e| e.to_string())?;
    let preds = predict(&lab, &model).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    let mut transport = 0.0f64;
    for h in TILTED_H {
        let op = assemble(&p, &model, h, &GridSpec::new(NX, NH)).map_err(|e| e.to_string())?;
        let q = build_quasimode(&p, &lab, &model, 1, h, QuasimodeParams::default()).map_err(|e| e.to_string())?;
        let r = rayleigh_quotient(&q, &op, &model).map_err(|e| e.to_string())?;
        ratios.push(r.discrete / preds[0].lambda(h));
        transport = transport.max(r.transport_relative);
    }
    let trend = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let band = (0.9..=1.1).contains(&ratios[2]);
    let detail = format!(
        "ratios {:.4}/{:.4}/{:.4} (band [0.9,1.1] at h=0.05: {}), monotone trend: {trend}, transport {transport:.1e}",
        ratios[0], ratios[1], ratios[2], if band { "met" } else { "missed" }
    );
    check(trend && band && transport <= 1e-10, detail)
}

fn spectrum_structure() -> Outcome {
    let model = CollisionModel::mild_relaxation(1);
    let mut scaled = Vec::new();
    let mut notes = Vec::new();
    let cases: Vec<(Box<dyn Potential<f64>>, f64, usize)> = TILTED_H
        .iter()
        .map(|&h| (Box::new(tilted_double_well::<f64>()) as Box<dyn Potential<f64>>, h, NX))
        .chain(std::iter::once((Box::new(triple_well::<f64>()) as Box<dyn Potential<f64>>, 0.08, 440)))
        .collect();
    for (p, h, nx) in &cases {
        let lab = analyze(p.as_ref(), 64, 2000).map_err(|e| e.to_string())?;
        let op = assemble(p.as_ref(), &model, *h, &GridSpec::new(*nx, NH)).map_err(|e| e.to_string())?;
        let sr = small_eigenvalues(&op, &EigenOptions::new(lab.n0() + 2, *h)).map_err(|e| e.to_string())?;
        let count = sr.count_in_strip(1.5);
        if count != lab.n0() {
            return Err(format!("h {h}: {count} eigenvalues in strip, expected {}", lab.n0()));
        }
        if sr.eigenvalues[0].norm() > 1e-11 * sr.norm_a {
            return Err(format!("h {h}: kernel eigenvalue {}", sr.eigenvalues[0]));
        }
        if sr.eigenvalues[1..].iter().any(|z| z.re <= 0.0) {
            return Err(format!("h {h}: nonpositive real part"));
        }
        if lab.n0() == 2 {
            let probe = resolvent_probe(&op, *h, 1.5, 1.0, 16).map_err(|e| e.to_string())?;
            let m = probe.iter().map(|r| r.scaled).fold(0.0, f64::max);
            scaled.push(m);
            notes.push(format!("h={h} h^2|R|={m:.2}"));
        } else {
            notes.push(format!("triple h={h} count={count}"));
        }
    }
    let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    check(spread <= 3.0, format!("{}, spread {spread:.2}", notes.join(", ")))
}

// rho(t) = t / (1 + t) at rational h = a / b, lower bounds with C = 2
fn coercivity_exact() -> Outcome {
    let model = CollisionModel::bgk(RateFunction::mild_relaxation(), 1);
    let mut checked = 0;
    for (a, b) in [(1i128, 5i128), (1, 10), (1, 20), (1, 50), (1, 100), (1, 1000), (1, 2)] {
        let h = a as f64 / b as f64;
        let q = q_hermite_diagonal(&model, h, 400).map_err(|e| e.to_string())?;
        for n in 1..=400i128 {
            // rho = a n / (b + a n)
            let (num, den) = (a * n, b + a * n);
            // rho >= h n / (2 (1 + h n))  <=>  2 num (b + a n) >= a n den
            if 2 * num * (b + a * n) < a * n * den {
                return Err(format!("h={a}/{b} n={n}: first bound"));
            }
            // rho >= h / 2  <=>  2 b num >= a den
            if 2 * b * num < a * den {
                return Err(format!("h={a}/{b} n={n}: second bound"));
            }
            let exact = num as f64 / den as f64;
            if (q[n as usize] - exact).abs() > 4.0 * f64::EPSILON * exact {
                return Err(format!("h={a}/{b} n={n}: library {} vs {exact}", q[n as usize]));
            }
            checked += 1;
        }
        if coercivity_violation(&model, h, 400, 2.0).map_err(|e| e.to_string())?.is_some() {
            return Err(format!("h={a}/{b}: library reports a violation"));
        }
    }
    Ok(format!("{checked} entries, C = 2"))
}

fn semigroup_rate() -> Outcome {
    let model = CollisionModel::mild_relaxation(1);
    let h = 0.1;
    let op = assemble(&double_well::<f64>(), &model, h, &GridSpec::new(NX, NH)).map_err(|e| e.to_string())?;
    let sr = small_eigenvalues(&op, &EigenOptions::new(3, h)).map_err(|e| e.to_string())?;
    let lam = sr.eigenvalues[1].re;
    let u0 = op.level0_profile(0.0, |x| x > 0.0);
    let run = evolve(&op, &u0, Some(&sr), 1, &TimePolicy::new(h, 1e4)).map_err(|e| e.to_string())?;
    let fit = decay_rate(&run, None).map_err(|e| e.to_string())?;
    let rate_ratio = fit.rate_times_h / lam;

    let p = triple_well::<f64>();
    let h = 0.08;
    let lab = analyze(&p, 64, 2000).map_err(|e| e.to_string())?;
    let preds = predict(&lab, &model).map_err(|e| e.to_string())?;
    let op = assemble(&p, &model, h, &GridSpec::new(440, NH)).map_err(|e| e.to_string())?;
    let sr = small_eigenvalues(&op, &EigenOptions::new(5, h)).map_err(|e| e.to_string())?;
    let right = lab.minima.iter().max_by(|a, b| a.point.location[0].partial_cmp(&b.point.location[0]).unwrap()).unwrap();
    let sr_x = lab.saddles.iter().map(|s| s.point.location[0]).fold(f64::NEG_INFINITY, f64::max);
    let u0 = op.level0_profile(right.point.value, |x| x > sr_x);
    let run = evolve(&op, &u0, Some(&sr), 3, &TimePolicy::new(h, 1e12)).map_err(|e| e.to_string())?;
    let rows = plateau_report(&run, &preds, 1e-3);
    let plateaus = rows.iter().filter(|r| r.interval.is_some()).count();
    let (s1, s2) = (preds[0].s, preds[1].s);
    let predicted = (2.0 * (s1 - s2) / h).exp();
    let observed = match (rows[0].onset(), rows[1].onset()) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    let band = observed / predicted;
    let detail = format!(
        "double well rate*h/lambda = {rate_ratio:.4}; triple well {plateaus} plateaus, onset ratio {observed:.3e} vs {predicted:.3e}"
    );
    check((0.9..=1.1).contains(&rate_ratio) && plateaus >= 2 && (0.1..=10.0).contains(&band), detail)
}

fn laplace_method() -> Outcome {
    let hess = Matrix2::new(2.0, 1.0, 1.0, 2.0);
    let quad = |x: f64, y: f64| x * x + x * y + y * y;
    let mut worst = 0.0f64;
    for h in [0.1, 0.01, 0.001] {
        worst = worst.max((laplace_ratio(&quad, &|_, _| 1.0, [0.0, 0.0], hess, h, 12.0, 401) - 1.0).abs());
    }
    let phi = |x: f64, y: f64| quad(x, y) + 0.5 * x * x * x + x.powi(4);
    let rows = laplace_check(&phi, &|x: f64, y: f64| 1.0 + x * y, [0.0, 0.0], hess, &[0.04, 0.02, 0.01, 0.005]);
    let spread = constant_spread(&rows);
    let cs: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.error_over_h)).collect();
    check(worst <= 1e-12 && spread <= 1.5, format!("quadratic error {worst:.1e}; error/h = {} (spread {spread:.3})", cs.join("/")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("prefactor equivalence", prefactor_equivalence),
        ("landscape oracle", landscape_oracle),
        ("eigenvalue asymptotics", eigenvalue_asymptotics),
        ("rayleigh quotient", rayleigh_quotient_check),
        ("spectrum structure", spectrum_structure),
        ("collision coercivity", coercivity_exact),
        ("semigroup rate", semigroup_rate),
        ("laplace method", laplace_method),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS {} {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
