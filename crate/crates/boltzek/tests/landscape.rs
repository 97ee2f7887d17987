use boltzek::error::Error;
use boltzek::landscape::{
    analyze, component_count, find_critical_points, half_values, lift_check_analysis, lift_check_w, separating_saddles, Grid,
};
use boltzek::potential::{double_well, tilted_double_well, tilted_double_well_2d, triple_well, validate_potential, Potential};
use proptest::prelude::*;
use std::collections::VecDeque;

mod common;
use common::{bisect, s_oracle_rows, Lattice};

fn flood_fill_count(lat: &Lattice, half: &[f64], tau: f64) -> usize {
    let mut seen = vec![false; lat.len()];
    let mut count = 0;
    for k in 0..lat.len() {
        if seen[k] || half[k] >= tau {
            continue;
        }
        count += 1;
        let mut q = VecDeque::from([k]);
        seen[k] = true;
        while let Some(i) = q.pop_front() {
            for j in lat.neighbours(i) {
                if !seen[j] && half[j] < tau {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    count
}

fn check_s_oracle(p: &dyn Potential<f64>, res: usize) {
    for (s, oracle, quantum) in s_oracle_rows(p, res) {
        assert!((s - oracle).abs() <= 2.0 * quantum, "S {s} vs oracle {oracle} (quantum {quantum})");
    }
}

#[test]
fn tilted_double_well_critical_points_match_cubic_roots() {
    let p = tilted_double_well::<f64>();
    let dv = |x: f64| x * x * x - x + 0.1;
    let roots = [bisect(dv, -2.0, -0.5), bisect(dv, -0.5, 0.5), bisect(dv, 0.5, 2.0)];
    let crit = find_critical_points(&p, 64).unwrap();
    assert_eq!(crit.len(), 3);
    let mut xs: Vec<f64> = crit.iter().map(|c| c.location[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (x, r) in xs.iter().zip(&roots) {
        assert!((x - r).abs() < 1e-10);
    }
    let lab = analyze(&p, 64, 2000).unwrap();
    assert_eq!(lab.n0(), 2);
    let right = &lab.minima[1];
    assert_eq!((right.k, right.j), (2, 1));
    assert!((right.point.location[0] - roots[2]).abs() < 1e-10);
    let s_expected = (p.v(roots[1]) - p.v(roots[2])) / 2.0;
    assert!((right.s.unwrap() - s_expected).abs() < 1e-10);
    assert!((s_expected - 0.078_832_478_673_8).abs() < 1e-10);
}

#[test]
fn symmetric_double_well_is_rejected_but_separates() {
    let p = double_well::<f64>();
    let crit = find_critical_points(&p, 64).unwrap();
    let sad = separating_saddles(&p, &crit, 2000).unwrap();
    assert_eq!(sad.values.len(), 1);
    assert!((sad.values[0] - 0.125).abs() < 1e-12);
    assert!(sad.saddles[0].point.location[0].abs() < 1e-12);
    assert!(matches!(analyze(&p, 64, 2000), Err(Error::HypothesisJVideViolated(_))));
    let lift = lift_check_analysis(&p, &sad, 600).unwrap();
    assert!((lift.w_values[0] - 0.125).abs() <= 2.0 * lift.quantum);
}

#[test]
fn minimax_oracle_tilted_and_triple() {
    check_s_oracle(&tilted_double_well::<f64>(), 2000);
    check_s_oracle(&triple_well::<f64>(), 2000);
}

#[test]
fn minimax_oracle_two_dimensional() {
    check_s_oracle(&tilted_double_well_2d::<f64>(), 160);
}

#[test]
fn triple_well_labels() {
    let p = triple_well::<f64>();
    let lab = analyze(&p, 64, 2000).unwrap();
    assert_eq!(lab.n0(), 3);
    assert_eq!(lab.separating_values.len(), 2);
    let xs: Vec<f64> = lab.minima.iter().map(|m| m.point.location[0]).collect();
    assert!((xs[0] + 2.0036).abs() < 1e-3 && (xs[1] - 0.2750).abs() < 1e-3 && (xs[2] - 1.9996).abs() < 1e-3);
    assert!((lab.minima[1].s.unwrap() - 0.749_68).abs() < 1e-4);
    assert!((lab.minima[2].s.unwrap() - 0.248_46).abs() < 1e-4);
    let lift = lift_check_w(&p, &lab, 600).unwrap();
    assert_eq!(lift.w_values.len(), 2);
}

#[test]
fn component_count_matches_flood_fill() {
    for (p, res) in [(Box::new(triple_well::<f64>()) as Box<dyn Potential<f64>>, 1500), (Box::new(tilted_double_well_2d::<f64>()), 120)] {
        let grid = Grid::new(p.window(), res);
        let half = half_values(p.as_ref(), &grid);
        let lat = Lattice::new(p.as_ref(), res);
        let oracle_half: Vec<f64> = (0..lat.len()).map(|k| 0.5 * p.value(&lat.point(k))).collect();
        for tau in [-0.2, 0.0, 0.05, 0.2, 0.3, 0.6, 1.0] {
            assert_eq!(component_count(&grid, &half, tau), flood_fill_count(&lat, &oracle_half, tau), "tau {tau}");
        }
    }
}

#[test]
fn builtin_potentials_are_consistent() {
    for p in [tilted_double_well::<f64>(), triple_well::<f64>(), double_well::<f64>()] {
        assert!(validate_potential(&p, 200, 1).ok(1e-3));
    }
    assert!(validate_potential(&tilted_double_well_2d::<f64>(), 200, 1).ok(1e-3));
}

#[test]
fn single_precision_labeling() {
    let p = tilted_double_well::<f32>();
    let lab = analyze(&p, 64, 1000).unwrap();
    assert_eq!(lab.n0(), 2);
    assert!((lab.minima[1].s.unwrap() as f64 - 0.078_832_48).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn labeling_is_shift_invariant(c in -5.0f64..5.0) {
        let p = tilted_double_well::<f64>();
        let a = analyze(&p, 48, 1000).unwrap();
        let b = analyze(&p.shifted(c), 48, 1000).unwrap();
        prop_assert_eq!(a.n0(), b.n0());
        for (x, y) in a.minima.iter().zip(&b.minima) {
            prop_assert!((x.point.location[0] - y.point.location[0]).abs() < 1e-9);
            prop_assert_eq!((x.k, x.j), (y.k, y.j));
            match (x.s, y.s) {
                (Some(s), Some(t)) => prop_assert!((s - t).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
