use boltzek::banded::BandLu;
use boltzek::collision::CollisionModel;
use boltzek::discretization::{assemble, norm_c, solve_shifted, to_complex, GridSpec, Scheme};
use boltzek::error::Error;
use boltzek::potential::{double_well, tilted_double_well};
use boltzek::sparse::Csr;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn shape_and_bandwidth() {
    let op = assemble(&double_well::<f64>(), &CollisionModel::mild_relaxation(1), 0.1, &GridSpec::new(200, 20)).unwrap();
    assert_eq!(op.dim(), 4000);
    assert!(op.kl <= 21 && op.ku <= 21);
    assert_eq!(op.matrix.n, 4000);
}

#[test]
fn maxwellian_kernel_per_scheme() {
    let p = tilted_double_well::<f64>();
    let m = CollisionModel::mild_relaxation(1);
    let st = assemble(&p, &m, 0.1, &GridSpec::new(400, 30)).unwrap();
    assert!(st.kernel_residual() <= 1e-11 * st.norm());
    // centred differences only reproduce the kernel to truncation order
    let ce = assemble(&p, &m, 0.1, &GridSpec::new(400, 30).scheme(Scheme::Central)).unwrap();
    assert!(ce.kernel_residual() > 1e-11 * ce.norm());
}

#[test]
fn transport_is_skew_and_operator_accretive() {
    let p = tilted_double_well::<f64>();
    let m = CollisionModel::mild_relaxation(1);
    for scheme in [Scheme::Staggered, Scheme::Central, Scheme::Upwind] {
        let op = assemble(&p, &m, 0.2, &GridSpec::new(40, 8).scheme(scheme)).unwrap();
        let a = op.matrix.to_dense();
        let sym = (&a + a.transpose()) * 0.5;
        let lo = sym.symmetric_eigenvalues().min();
        assert!(lo >= -1e-10, "{scheme:?}: {lo}");
        if scheme != Scheme::Upwind {
            let mut x = a.clone();
            for ix in 0..op.nx {
                for n in 0..op.n_hermite {
                    let k = op.index(ix, n);
                    x[(k, k)] -= op.q_diag[n];
                }
            }
            assert!((&x + x.transpose()).amax() < 1e-12);
        }
    }
}

#[test]
fn dense_solve_oracle() {
    let op = assemble(&tilted_double_well::<f64>(), &CollisionModel::mild_relaxation(1), 0.1, &GridSpec::new(60, 8)).unwrap();
    let n = op.dim();
    let z = c(0.01, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rhs: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let dense = op.matrix.to_dense().map(|v| c(v, 0.0)) - DMatrix::<Complex64>::identity(n, n) * z;
    let oracle = dense.clone().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
    let w = solve_shifted(&op, z, &rhs).unwrap();
    let err: f64 = w.iter().zip(oracle.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= 1e-10 * oracle.norm());
    let (_, stats) = op.shifted(z).unwrap().solve_with_stats(&rhs).unwrap();
    assert!(stats.relative_residual <= 1e-10);
    let wa = op.shifted(z).unwrap().solve_adjoint(&rhs).unwrap();
    let oa = dense.adjoint().lu().solve(&DVector::from_vec(rhs)).unwrap();
    let erra: f64 = wa.iter().zip(oa.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(erra <= 1e-10 * oa.norm());
}

#[test]
fn exact_kernel_shift_is_singular() {
    let op = assemble(&tilted_double_well::<f64>(), &CollisionModel::mild_relaxation(1), 0.1, &GridSpec::new(100, 10)).unwrap();
    assert!(matches!(op.shifted(c(0.0, 0.0)), Err(Error::SingularShift { .. })));
}

#[test]
fn input_validation() {
    let p = tilted_double_well::<f64>();
    let m = CollisionModel::mild_relaxation(1);
    assert!(matches!(assemble(&p, &m, 0.5, &GridSpec::new(100, 10).window(-1.2, 1.2)), Err(Error::WindowTooSmall { .. })));
    assert!(assemble(&p, &m, 0.1, &GridSpec::new(100, 6)).is_err());
    assert!(assemble(&p, &m, -0.1, &GridSpec::new(100, 10)).is_err());
    assert_eq!("upwind".parse::<Scheme>().unwrap(), Scheme::Upwind);
    assert!("spectral".parse::<Scheme>().is_err());
}

#[test]
fn implicit_step_contracts() {
    let op = assemble(&tilted_double_well::<f64>(), &CollisionModel::mild_relaxation(1), 0.1, &GridSpec::new(100, 10)).unwrap();
    let lu = op.implicit_factor(5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let before = boltzek::discretization::norm(&u);
    lu.solve_in_place(&mut u);
    assert!(boltzek::discretization::norm(&u) <= before);
    let m = op.maxwellian();
    let mut v = m.clone();
    lu.solve_in_place(&mut v);
    let d: f64 = v.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-12);
    assert!(op.tail_mass(&to_complex(&m)) == 0.0);
}

#[test]
fn sparse_storage() {
    let a = Csr::from_triplets(3, vec![(0, 0, 1.0), (0, 0, 1.0), (1, 2, 3.0), (2, 1, 0.0), (2, 0, -1.0)]);
    assert_eq!(a.nnz(), 3);
    assert_eq!(a.get(0, 0), 2.0);
    assert_eq!(a.transpose().get(2, 1), 3.0);
    assert_eq!(a.bandwidths(), (2, 1));
    assert_eq!(a.mul(&[1.0, 1.0, 1.0]), vec![2.0, 3.0, -1.0]);
    assert_eq!(a.mul_t(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 3.0]);
    let s = a.symmetric_part();
    assert_eq!(s.get(1, 2), 1.5);
    let svd = a.to_dense().singular_values().max();
    assert!((a.norm2_estimate(200) - svd).abs() < 1e-8 * svd);
    let mut out = Vec::new();
    a.write_triplets(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("%%MatrixMarket"));
    assert_eq!(text.lines().count(), 5);
}

fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |i, j| {
        if j + kl >= i && j <= i + ku {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } else {
            c(0.0, 0.0)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn banded_lu_matches_dense(n in 2usize..40, kl in 0usize..5, ku in 0usize..5, seed in 0u64..1000) {
        let a = random_band(n, kl, ku, seed);
        let lu = BandLu::factor(n, kl, ku, |i| (0..n).filter(|&j| a[(i, j)] != c(0.0, 0.0)).map(|j| (j, a[(i, j)])).collect());
        prop_assume!(lu.pivot_ratio > 1e-8);
        let b: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let bv = DVector::from_vec(b.clone());
        for (mode, m) in [(0, a.clone()), (1, a.transpose()), (2, a.adjoint())] {
            let mut x = b.clone();
            match mode {
                0 => lu.solve_in_place(&mut x),
                1 => lu.solve_transpose_in_place(&mut x, false),
                _ => lu.solve_transpose_in_place(&mut x, true),
            }
            let r = &m * DVector::from_vec(x) - &bv;
            prop_assert!(r.norm() <= 1e-8 * (1.0 + bv.norm()) / lu.pivot_ratio.min(1.0));
        }
    }

    #[test]
    fn assembled_operator_is_accretive(seed in 0u64..1000, h in 0.05f64..0.3) {
        let op = assemble(&tilted_double_well::<f64>(), &CollisionModel::mild_relaxation(1), h, &GridSpec::new(300, 12)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let au = op.apply(&u);
        let q: f64 = au.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!(q >= -1e-12 * norm_c(&to_complex(&u)).powi(2));
    }
}
