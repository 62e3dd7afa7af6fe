use std::f64::consts::PI;

use hyheat::analytic::{self, two_state_model, two_state_stability, ExponentMode};
use hyheat::large_deviation::{growth_oracle, rate_function, tilted_principal_eigenvalue, DenseEigenBackend, PowerIterationBackend};
use hyheat::montecarlo::{estimate_sample_exponent, EstimatorConfig};
use hyheat::rng::stream_rng;
use hyheat::{Generator, HybridHeatModel, InitialData, SpectralBasis};
use proptest::prelude::*;
use rand::Rng;

fn generator(n: usize, seed: u64) -> Generator {
    Generator::random_irreducible(n, 5.0, 0.3, &mut stream_rng(seed, 0))
}

fn simplex_point(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 1);
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn noisy_model(n: usize, seed: u64, lead: usize) -> HybridHeatModel {
    let mut rng = stream_rng(seed, 2);
    let alpha = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    let beta = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)]).collect();
    HybridHeatModel::new(
        generator(n, seed),
        SpectralBasis::interval(PI, 6).unwrap(),
        InitialData::single_mode(lead, 6).unwrap(),
        alpha,
        beta,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stationary_residual_is_tiny(n in 2usize..=6, seed in any::<u64>()) {
        let g = generator(n, seed);
        let pi = g.stationary_distribution().unwrap();
        prop_assert!(pi.residual(&g) <= 1e-12 * g.scale().max(1.0));
        prop_assert!((pi.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pi.pi.iter().all(|p| *p > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rate_function_is_nonnegative_and_convex(n in 2usize..=5, seed in any::<u64>()) {
        let g = generator(n, seed);
        let a = simplex_point(n, seed);
        let b = simplex_point(n, seed ^ 0xabcdef);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (ia, ib, im) = (
            rate_function(&g, &a).unwrap().value,
            rate_function(&g, &b).unwrap().value,
            rate_function(&g, &mid).unwrap().value,
        );
        prop_assert!(ia >= -1e-10 && ib >= -1e-10 && im >= -1e-10);
        prop_assert!(im <= 0.5 * (ia + ib) + 1e-8);
    }

    #[test]
    fn growth_rate_is_monotone_and_shift_covariant(
        n in 2usize..=5,
        seed in any::<u64>(),
        bump in 0.0f64..2.0,
        c in -5.0f64..5.0,
    ) {
        let g = generator(n, seed);
        let mut rng = stream_rng(seed, 3);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
        let base = tilted_principal_eigenvalue(&g, &w).unwrap();
        let i = rng.random_range(0..n);
        let mut up = w.clone();
        up[i] += bump;
        prop_assert!(tilted_principal_eigenvalue(&g, &up).unwrap() >= base - 1e-12);
        let shifted: Vec<f64> = w.iter().map(|x| x + c).collect();
        prop_assert!((tilted_principal_eigenvalue(&g, &shifted).unwrap() - base - c).abs() <= 1e-10);
        let dense = hyheat::large_deviation::dense_eigenvalue(&g, &w).unwrap();
        prop_assert!((dense - base).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn exponent_orderings(n in 1usize..=4, seed in any::<u64>(), lead in 1usize..=3, p in 1.0f64..4.0) {
        let m = noisy_model(n, seed, lead);
        let b = PowerIterationBackend::default();
        let exact = analytic::sample_exponent(&m, ExponentMode::Exact).unwrap();
        let bound = analytic::sample_exponent(&m, ExponentMode::UpperBound).unwrap();
        prop_assert!(exact <= bound);
        let moment = analytic::moment_exponent(&m, p, ExponentMode::Exact, &b).unwrap();
        prop_assert!(p * exact <= moment + 1e-9);
        prop_assert!(analytic::moment_lower_bound_pi(&m, p).unwrap() <= moment + 1e-9);
        let dense = analytic::moment_exponent(&m, p, ExponentMode::Exact, &DenseEigenBackend).unwrap();
        prop_assert!((dense - moment).abs() <= 1e-8 * (1.0 + moment.abs()));
    }

    #[test]
    fn two_state_predicate_agrees_with_theorem(
        a in -2.0f64..3.0, b in -2.0f64..3.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
        g12 in 0.1f64..5.0, g21 in 0.1f64..5.0,
    ) {
        let v = two_state_stability(a, b, c, d, g12, g21).unwrap();
        let m = two_state_model(a, b, c, d, g12, g21, 2).unwrap();
        let e = analytic::sample_exponent(&m, ExponentMode::Exact).unwrap();
        prop_assert!((v.margin + e).abs() <= 1e-12);
        if v.margin.abs() > 1e-12 {
            prop_assert_eq!(v.is_stable(), e < 0.0);
        }
    }
}

#[test]
fn oracle_error_shrinks_past_mixing() {
    let g = Generator::two_state(4.0, 2.0).unwrap();
    let w = [5.0, 3.0];
    let lambda = tilted_principal_eigenvalue(&g, &w).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| 10.0 * k as f64).collect();
    let pts = growth_oracle(&g, &w, &grid).unwrap();
    for i in 0..2 {
        let errs: Vec<f64> = pts.iter().map(|p| (p.rate[i] - lambda).abs()).collect();
        assert!(errs.windows(2).all(|e| e[1] <= e[0]), "{errs:?}");
    }
    assert!((pts[4].rate[0] - lambda).abs() < 5e-2);
    assert!((pts[19].rate[0] - lambda).abs() < 1e-2);
}

#[test]
fn disjoint_seed_blocks_agree() {
    let m = noisy_model(3, 77, 1);
    let a = estimate_sample_exponent(&m, &EstimatorConfig::new(20.0, 400, 1)).unwrap();
    let b = estimate_sample_exponent(&m, &EstimatorConfig::new(20.0, 400, 2)).unwrap();
    let se = a.standard_error.hypot(b.standard_error);
    assert!((a.estimate - b.estimate).abs() <= 4.0 * se);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn occupation_identities(n in 1usize..=5, seed in any::<u64>(), frac in 0.01f64..1.0) {
        let g = if n == 1 { Generator::single() } else { generator(n, seed) };
        let horizon = 20.0;
        let path = g.simulate_path(0, horizon, &mut stream_rng(seed, 4)).unwrap();
        let t = frac * horizon;
        let occ = path.occupation_measure(t, n).unwrap();
        prop_assert!(occ.weights.iter().all(|w| *w >= 0.0));
        prop_assert!((occ.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let f: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sin()).collect();
        let direct = path.path_integral(&f, t).unwrap();
        let via_measure = t * f.iter().zip(&occ.weights).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((direct - via_measure).abs() <= 1e-12 * t);
    }

    #[test]
    fn projection_recovers_finite_sums(coeffs in prop::collection::vec(-2.0f64..2.0, 1..12), scale in 0.01f64..100.0) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-3));
        let n = coeffs.len();
        let basis = SpectralBasis::interval(PI, n).unwrap();
        let u0 = |x: f64| coeffs.iter().enumerate().map(|(k, c)| c * basis.eigenfunction(k + 1, x).unwrap()).sum::<f64>();
        let got = basis.project_initial(u0, basis.default_quad_nodes()).unwrap();
        for (a, b) in got.coefficients().iter().zip(&coeffs) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let scaled = basis.project_initial(|x| scale * u0(x), basis.default_quad_nodes()).unwrap();
        prop_assert_eq!(scaled.leading_index(), got.leading_index());
    }

    #[test]
    fn quadrature_refinement_is_stable(a in -2.0f64..2.0, length in 0.5f64..5.0) {
        let basis = SpectralBasis::interval(length, 16).unwrap();
        let u0 = |x: f64| (a * x / length).exp() * x * (length - x);
        let coarse = basis.project_initial(u0, 64).unwrap();
        let fine = basis.project_initial(u0, 128).unwrap();
        for (c, f) in coarse.coefficients().iter().zip(fine.coefficients()) {
            prop_assert!((c - f).abs() < 1e-10);
        }
    }

    #[test]
    fn solution_norms_are_positive_and_factorize(n in 1usize..=3, seed in any::<u64>()) {
        let m = noisy_model(n, seed, 1);
        let grid = [0.5, 1.0, 4.0];
        let sol = hyheat::PathSolution::simulate(&m, 0, &grid, &mut stream_rng(seed, 5)).unwrap();
        for t in grid {
            let u = sol.solution_norm(t).unwrap();
            let v = sol.deterministic_norm(t).unwrap();
            prop_assert!(u.value() > 0.0 && v.value() > 0.0);
            let s = sol.stochastic_factor(t).unwrap();
            prop_assert!((u.value() - s * v.value()).abs() <= 1e-12 * u.value());
        }
    }
}
