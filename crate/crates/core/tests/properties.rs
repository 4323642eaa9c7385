use gsketch_core::covariance::{
    discretize_covariance, jacobi_poly_weighted, psd_defect, CovarianceSpec, EigenSequence, JacobiKernel,
};
use gsketch_core::hsop::{apply_adjoint, apply_operator, weighted_qr, BuiltinKernel, DiscretizedKernel};
use gsketch_core::linalg::{pivoted_qr, svd_desc, sym_eigen_desc};
use gsketch_core::quadrature::{GridFamily, QuadratureGrid};
use gsketch_core::sampling::{draw_mvn_matrix, factor_covariance, RandomSource};
use gsketch_core::sketch::{
    beta_k, beta_k_upper_bound, bound_rhs, gamma_k, project_error, quality_factors, range_finder, svd_tail,
    BoundMode, QualityFactors, SketchConfig,
};
use gsketch_core::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn spd(n: usize, seed: u64) -> DMatrix<f64> {
    let a = gauss(n, n, seed);
    a.transpose() * a + DMatrix::identity(n, n) * 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tail_is_nonincreasing(mut s in prop::collection::vec(0.0f64..10.0, 1..30)) {
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let full: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((svd_tail(&s, 0).unwrap() - full).abs() <= 1e-12 * full.max(1.0));
        for k in 1..=s.len() {
            prop_assert!(svd_tail(&s, k).unwrap() <= svd_tail(&s, k - 1).unwrap());
        }
    }

    #[test]
    fn projection_respects_best_error_and_nesting(m in 5usize..25, n in 5usize..25, seed in any::<u64>()) {
        let a = gauss(m, n, seed);
        let omega = gauss(n, n.min(m), seed ^ 1);
        let s = svd_desc(&a).singular_values;
        let scale = a.norm();
        let mut last = f64::INFINITY;
        for j in 1..=omega.ncols() {
            let q = range_finder(&a, &omega.columns(0, j).clone_owned()).unwrap();
            let e = project_error(&a, &q).unwrap();
            prop_assert!(e >= svd_tail(&s, q.ncols()).unwrap() - 1e-10 * scale);
            prop_assert!(e <= last + 1e-10 * scale);
            last = e;
        }
    }

    #[test]
    fn quality_factors_in_unit_interval(n in 4usize..20, seed in any::<u64>(), kfrac in 0.1f64..0.9) {
        let k = ((n as f64 * kfrac) as usize).clamp(1, n - 1);
        let a = gauss(n, n, seed);
        let cov = spd(n, seed ^ 7);
        let qf = quality_factors(&a, &cov, k).unwrap();
        prop_assert!(qf.gamma_k > 0.0 && qf.gamma_k <= 1.0 + 1e-12);
        prop_assert!(qf.beta_k > 0.0 && qf.beta_k <= 1.0 + 1e-12);
        let id = quality_factors(&a, &DMatrix::identity(n, n), k).unwrap();
        prop_assert!((id.gamma_k - 1.0).abs() <= 1e-12);
        prop_assert!((id.beta_k - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gamma_respects_eigenvalue_bound(n in 4usize..20, seed in any::<u64>(), k in 1usize..4) {
        let cov = spd(n, seed);
        let lambdas = sym_eigen_desc(&cov).values;
        let v1 = pivoted_qr(&gauss(n, k, seed ^ 3), 0.0).q;
        let g = gamma_k(&cov, &v1).unwrap();
        let bound: f64 = (n - k..n).map(|j| lambdas[0] / lambdas[j]).sum::<f64>() / k as f64;
        prop_assert!(1.0 / g <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn beta_below_its_upper_bound(n in 4usize..40, seed in any::<u64>(), kfrac in 0.1f64..0.9) {
        let k = ((n as f64 * kfrac) as usize).clamp(1, n - 1);
        let a = gauss(n, n, seed);
        let cov = spd(n, seed ^ 11);
        let svd = svd_desc(&a);
        let v2 = svd.v.columns(k, n - k).clone_owned();
        let b = beta_k(&cov, &v2, &svd.singular_values[k..]).unwrap();
        let lambdas: Vec<f64> = sym_eigen_desc(&cov).values.iter().copied().collect();
        let ub = beta_k_upper_bound(&lambdas, &svd.singular_values, k).unwrap();
        prop_assert!(b <= ub + 1e-12);
    }

    #[test]
    fn bound_is_monotone(ratio in 0.0f64..5.0, dr in 0.0f64..1.0, t in 1.0f64..10.0, dt in 0.0f64..2.0,
                         u in 1.0f64..5.0, du in 0.0f64..2.0, tail in 0.0f64..3.0) {
        let q = |r: f64| QualityFactors { gamma_k: 1.0, beta_k: r, lambda1: 1.0, exact_low_rank: false };
        let cfg = SketchConfig::new(5, 5, t, u).unwrap();
        let base = bound_rhs(&cfg, &q(ratio), tail, BoundMode::Generalized).unwrap();
        prop_assert!(bound_rhs(&cfg, &q(ratio + dr), tail, BoundMode::Generalized).unwrap() >= base);
        let more_t = SketchConfig::new(5, 5, t + dt, u).unwrap();
        prop_assert!(bound_rhs(&more_t, &q(ratio), tail, BoundMode::Generalized).unwrap() >= base);
        let more_u = SketchConfig::new(5, 5, t, u + du).unwrap();
        prop_assert!(bound_rhs(&more_u, &q(ratio), tail, BoundMode::Generalized).unwrap() >= base);
    }

    #[test]
    fn grid_weights_and_polynomial_exactness(n in 2usize..80, a in -3.0f64..0.0, len in 0.1f64..4.0) {
        let b = a + len;
        for fam in [GridFamily::ChebyshevCC, GridFamily::UniformTrapezoid] {
            let g = QuadratureGrid::new(fam, n, a, b).unwrap();
            let s: f64 = g.weights().iter().sum();
            prop_assert!((s - len).abs() <= 1e-10);
            prop_assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        }
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, n, -1.0, 1.0).unwrap();
        let deg = (n - 1).min(20);
        let f: Vec<f64> = g.nodes().iter().map(|x| x.powi(deg as i32)).collect();
        let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
        prop_assert!((g.integrate(&f) - exact).abs() <= 1e-12);
    }

    #[test]
    fn closed_form_kernels_symmetric(x in -1.0f64..1.0, y in -1.0f64..1.0, ell in 0.01f64..3.0) {
        for spec in [CovarianceSpec::sq_exp(ell, (-1.0, 1.0)).unwrap(), CovarianceSpec::periodic(ell, (-1.0, 1.0)).unwrap()] {
            let v = spec.kernel_eval(x, y).unwrap();
            prop_assert_eq!(v, spec.kernel_eval(y, x).unwrap());
            // Far apart with a short length scale the value underflows to 0.
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn jacobi_kernel_symmetric_and_unbiased(x in -1.0f64..1.0, y in -1.0f64..1.0, nu in 1.5f64..5.0) {
        let k = JacobiKernel::new(2, &EigenSequence::power_law(nu, 80).unwrap()).unwrap();
        let v = k.eval(x, y).unwrap();
        let scale = v.abs().max(1.0);
        prop_assert!((v - k.eval(y, x).unwrap()).abs() <= 1e-12 * scale);
        prop_assert!((v - k.eval(-y, -x).unwrap()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn jacobi_sup_bound(j in 0usize..200, x in -1.0f64..1.0) {
        let v = jacobi_poly_weighted(j, 2, x).unwrap();
        prop_assert!(v.abs() <= 2.0 * (j as f64 + 5.0 / 12.0).sqrt());
    }

    #[test]
    fn discretized_covariances_are_psd(n in 10usize..80, ell in 0.05f64..2.0, nu in 1.5f64..5.0) {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, n, -1.0, 1.0).unwrap();
        for spec in [
            CovarianceSpec::sq_exp(ell, (-1.0, 1.0)).unwrap(),
            CovarianceSpec::jacobi(2, EigenSequence::power_law(nu, 60).unwrap()).unwrap(),
        ] {
            let k = discretize_covariance(&spec, &g).unwrap();
            prop_assert!(psd_defect(&k, &g).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn weighted_qr_is_orthonormal(n in 10usize..60, cols in 1usize..8, seed in any::<u64>()) {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, n, -1.0, 1.0).unwrap();
        let y = gauss(n, cols.min(n), seed);
        let q = weighted_qr(&y, &g).unwrap();
        let w = DMatrix::from_diagonal(&gsketch_core::DVector::from_column_slice(g.weights()));
        let gram = q.transpose() * w * &q;
        prop_assert!((gram - DMatrix::identity(q.ncols(), q.ncols())).amax() <= 1e-10);
    }

    #[test]
    fn adjoint_identity(n in 10usize..60, seed in any::<u64>()) {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, n, -1.0, 1.0).unwrap();
        let k = DiscretizedKernel::builtin(BuiltinKernel::CosSin, g.clone(), g.clone()).unwrap();
        let f: Vec<f64> = gauss(n, 1, seed).iter().copied().collect();
        let h: Vec<f64> = gauss(n, 1, seed ^ 5).iter().copied().collect();
        let lhs = g.inner(&apply_operator(&k, &f).unwrap(), &h);
        let rhs = g.inner(&f, &apply_adjoint(&k, &h).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn draws_are_reproducible(seed in any::<u64>(), stream in any::<u64>(), n in 1usize..10, count in 1usize..5) {
        let fac = factor_covariance(&spd(n, seed)).unwrap();
        let src = RandomSource::with_stream(seed, stream);
        prop_assert_eq!(draw_mvn_matrix(&fac, src, count), draw_mvn_matrix(&fac, src, count));
    }

    #[test]
    fn factorization_reconstructs(n in 1usize..25, seed in any::<u64>()) {
        let k = spd(n, seed);
        let fac = factor_covariance(&k).unwrap();
        prop_assert!((fac.reconstruct() - &k).norm() <= 1e-8 * k.norm());
        let basis = fac.basis();
        prop_assert!((basis.transpose() * basis - DMatrix::identity(n, n)).amax() <= 1e-10);
    }
}
