use approx::assert_relative_eq;
use boltzek::saddledyn::{bgk_closed_form, f_spectrum, linearization_f, phi_eigenproblem, stable_phase, SaddleData};
use boltzek::{SaddleData32, SaddleData64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

// Faddeev-LeVerrier characteristic polynomial, monic, highest degree first.
fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[k - 1];
        let ck = -(a * &m).trace() / k as f64;
        c.push(ck);
    }
    c
}

fn roots(c: &[f64]) -> Vec<num_complex::Complex64> {
    let n = c.len() - 1;
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -c[j + 1];
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

#[test]
fn f_spectrum_matches_characteristic_polynomial() {
    let sd = SaddleData64::scalar(-1.0, 1.0).unwrap();
    let f = linearization_f(&sd).unwrap();
    let oracle = roots(&char_poly(&f));
    let ev = f_spectrum(&sd);
    assert_eq!(ev.len(), 4);
    for z in &ev {
        let d = oracle.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "{z} not a root");
    }
    // central symmetry, nothing on the imaginary axis
    for z in &ev {
        assert!(z.re.abs() > 1e-8);
        assert!(ev.iter().any(|w| (w + z).norm() < 1e-9));
    }
}

#[test]
fn golden_ratio_for_unit_data() {
    let sd = SaddleData64::scalar(-1.0, 1.0).unwrap();
    let pf = phi_eigenproblem(&sd).unwrap();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    assert_relative_eq!(pf.alpha0, golden, max_relative = 1e-13);
    assert_relative_eq!(pf.alpha0, 0.618_033_988_749_894_9, max_relative = 1e-13);
    assert!(pf.det_identity_residual < 1e-12);
    assert!(pf.alpha_identity_residual < 1e-12);
    assert!(pf.nu2()[0] < 0.0);
}

#[test]
fn stable_phase_is_hess_w_plus_nu_nu() {
    let sd = SaddleData64::new(vec![0.0, 0.0], DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0])), DMatrix::identity(2, 2)).unwrap();
    let sp = stable_phase(&sd).unwrap();
    assert!(sp.symmetry_defect < 1e-9);
    let pf = phi_eigenproblem(&sd).unwrap();
    let diff = (&sp.hess_phi_plus - &pf.hess_phi_plus).norm();
    assert!(diff < 1e-9, "diff {diff}");
    assert!(sp.hess_phi_plus.clone().symmetric_eigenvalues().min() > 0.0);
    assert!(sp.hess_phi_minus.clone().symmetric_eigenvalues().max() < 0.0);
}

#[test]
fn saddle_data_rejects_non_saddles() {
    assert!(SaddleData64::scalar(1.0, 1.0).is_err());
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
    assert!(SaddleData64::new(vec![0.0, 0.0], h, DMatrix::identity(2, 2)).is_err());
}

#[test]
fn single_precision_smoke() {
    let sd = SaddleData32::scalar(-0.97, 1.0).unwrap();
    let pf = phi_eigenproblem(&sd).unwrap();
    let (a, _) = bgk_closed_form(-0.97f64, 1.0);
    assert!((pf.alpha0 as f64 - a).abs() < 1e-4 * a);
}

fn bgk(mu: f64, rp: f64, d: usize) -> SaddleData64 {
    let mut h = DMatrix::identity(d, d) * 1.5;
    h[(0, 0)] = mu;
    SaddleData::new(vec![0.0; d], h, DMatrix::identity(d, d) * rp).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha0_matches_closed_form(mu in -10.0f64..-0.01, rp in 0.05f64..20.0, d in 1usize..3) {
        let pf = phi_eigenproblem(&bgk(mu, rp, d)).unwrap();
        let (a, nu2sq) = bgk_closed_form(mu, rp);
        prop_assert!((pf.alpha0 - a).abs() <= 1e-10 * a);
        prop_assert!((pf.nu2().norm_squared() - nu2sq).abs() <= 1e-8 * nu2sq);
        prop_assert!(pf.det_identity_residual <= 1e-8);
    }

    #[test]
    fn nu_components_have_opposite_signs(mu in -10.0f64..-0.01, rp in 0.05f64..20.0) {
        let pf = phi_eigenproblem(&SaddleData64::scalar(mu, rp).unwrap()).unwrap();
        prop_assert!(pf.nu2()[0] < 0.0);
        prop_assert!(pf.nu1()[0] > 0.0);
        prop_assert!((pf.nu1()[0] - mu * pf.nu2()[0] / pf.alpha0).abs() <= 1e-9 * pf.nu1()[0].abs());
    }

    #[test]
    fn alpha0_scale_covariance(mu in -10.0f64..-0.01, rp in 0.05f64..20.0, c in 0.1f64..10.0) {
        let a = phi_eigenproblem(&SaddleData64::scalar(mu, rp).unwrap()).unwrap().alpha0;
        let b = phi_eigenproblem(&SaddleData64::scalar(c * mu, c.sqrt() * rp).unwrap()).unwrap().alpha0;
        prop_assert!((b - c.sqrt() * a).abs() <= 1e-10 * b);
    }
}
