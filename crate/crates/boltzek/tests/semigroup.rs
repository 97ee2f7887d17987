use boltzek::collision::CollisionModel;
use boltzek::discretization::{assemble, GridSpec};
use boltzek::error::Error;
use boltzek::potential::{double_well, tilted_double_well};
use boltzek::semigroup::{decay_rate, evolve, plateau_report, require_plateaus, EvolutionRun, TimePolicy};
use boltzek::spectrum::{small_eigenvalues, EigenOptions};

fn synthetic(rate: f64, floor: f64) -> EvolutionRun {
    let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
    let d: Vec<f64> = times.iter().map(|t| (-rate * t).exp() + floor).collect();
    EvolutionRun { h: 0.5, norms: vec![1.0; times.len()], times, distances: vec![d], kernel_drift: 0.0 }
}

#[test]
fn decay_fit_recovers_rate() {
    let run = synthetic(0.7, 0.0);
    let fit = decay_rate(&run, None).unwrap();
    assert!((fit.rate - 0.7).abs() < 1e-6);
    assert!((fit.rate_times_h - 0.35).abs() < 1e-6);
    assert!(fit.residual < 1e-10);
    assert!(fit.window.0 >= 9.8 && fit.window.1 <= 29.7);
    let fixed = decay_rate(&run, Some((12.0, 25.0))).unwrap();
    assert!((fixed.rate - 0.7).abs() < 1e-6);
}

#[test]
fn decay_fit_rejects_short_windows() {
    let run = synthetic(0.7, 0.0);
    assert!(matches!(decay_rate(&run, Some((10.0, 10.5))), Err(Error::InsufficientWindow(_))));
    // plenty of samples but less than three decades of decay
    assert!(matches!(decay_rate(&run, Some((10.0, 18.0))), Err(Error::InsufficientWindow(_))));
    let flat = synthetic(0.7, 1e-2);
    assert!(matches!(decay_rate(&flat, None), Err(Error::InsufficientWindow(_))));
}

#[test]
fn plateau_detection_on_synthetic_series() {
    let times: Vec<f64> = std::iter::once(0.0).chain((0..=60).map(|i| 10f64.powf(i as f64 / 10.0))).collect();
    let d1: Vec<f64> = times.iter().map(|&t| if (10.0..=1e4).contains(&t) { 1e-5 } else { 1.0 }).collect();
    let d2: Vec<f64> = times.iter().map(|&t| if (10.0..=50.0).contains(&t) { 1e-5 } else { 1.0 }).collect();
    let run = EvolutionRun { h: 0.1, norms: vec![1.0; times.len()], times, distances: vec![d1, d2], kernel_drift: 0.0 };
    let rows = plateau_report(&run, &[], 1e-3);
    assert_eq!(rows[0].onset(), Some(10.0));
    assert!((rows[0].interval.unwrap().1 - 1e4).abs() < 1e-6);
    assert!(rows[1].interval.is_none());
    assert!(matches!(require_plateaus(&rows), Err(Error::NoPlateauDetected { k: 2 })));
    assert!(require_plateaus(&rows[..1]).is_ok());
}

#[test]
fn maxwellian_is_stationary_and_norm_decreases() {
    let h = 0.1;
    let op = assemble(&tilted_double_well::<f64>(), &CollisionModel::mild_relaxation(1), h, &GridSpec::new(200, 16)).unwrap();
    let sr = small_eigenvalues(&op, &EigenOptions::new(3, h)).unwrap();
    let m = op.maxwellian();
    let run = evolve(&op, &m, Some(&sr), 1, &TimePolicy::new(h, 1e3).steps(40)).unwrap();
    assert!(run.distances[0].iter().all(|d| *d < 1e-9));
    assert!(run.norms.iter().all(|n| (n - 1.0).abs() < 1e-9));

    let u0 = op.level0_profile(0.0, |x| x > 0.0);
    let run = evolve(&op, &u0, Some(&sr), 2, &TimePolicy::new(h, 1e3).steps(40)).unwrap();
    assert!(run.norm_monotone(1e-12));
    assert!(run.kernel_drift < 1e-9);
    assert_eq!(run.times.len(), run.norms.len());
    assert!(matches!(evolve(&op, &u0, None, 0, &TimePolicy::new(h, 1e3).steps(10)), Err(Error::InvalidInput(_))));
    assert!(evolve(&op, &u0, None, 0, &TimePolicy::new(1.0, 0.5)).is_err());
}

#[test]
fn decay_rate_matches_eigenvalue_and_is_step_stable() {
    let h = 0.1;
    let op = assemble(&double_well::<f64>(), &CollisionModel::mild_relaxation(1), h, &GridSpec::new(400, 30)).unwrap();
    let sr = small_eigenvalues(&op, &EigenOptions::new(3, h)).unwrap();
    let lam = sr.eigenvalues[1].re;
    // frozen from the shift-invert run
    assert!((lam / 2.304_125e-3 - 1.0).abs() < 1e-5);
    let u0 = op.level0_profile(0.0, |x| x > 0.0);
    let mut rates = Vec::new();
    for spd in [200, 400] {
        let run = evolve(&op, &u0, Some(&sr), 1, &TimePolicy::new(h, 1e4).steps(spd)).unwrap();
        let fit = decay_rate(&run, None).unwrap();
        assert!((fit.rate_times_h / lam - 1.0).abs() < 0.01, "spd {spd}: {}", fit.rate_times_h / lam);
        rates.push(fit.rate);
    }
    assert!((rates[1] / rates[0] - 1.0).abs() < 0.01);
}
