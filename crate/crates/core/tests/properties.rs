use std::sync::Arc;

use pcrit::asymptotics::{fit_log_corrected, fit_power, predict, richardson};
use pcrit::bounds::{
    capacity_value, constants_a_b, incomplete_gamma_zero, incomplete_gamma_zero_cf,
    incomplete_gamma_zero_series, supersolution_residual, CapacityMode, CapacityProblem, Family,
    Supersolution,
};
use pcrit::energy::{energy, rayleigh, ProblemSpec, Regime};
use pcrit::potentials::{
    bump_perturbation, potential_from_profile, read_table, smooth_tail_profile, write_table,
    Potential,
};
use pcrit::radial::{
    ball_volume, integrate, make_grid, radial_p_laplacian, Grading, PowerLaw, RadialField,
    RadialFunction,
};
use pcrit::scalar::Scalar;
use proptest::prelude::*;

/// `(p, N)` with `p < N`, `p` in `[1.5, 4]`.
fn subcritical_pair() -> impl Strategy<Value = (f64, usize)> {
    (1.5f64..4.0).prop_flat_map(|p| {
        let lo = p.floor() as usize + 1;
        (Just(p), lo..lo + 5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cell_weights_sum_to_ball_volume(dim in 1usize..8, r_max in 0.5f64..50.0, m in 16usize..400, ratio in 1.0001f64..1.05) {
        let g = make_grid(dim, r_max, m, Grading::Geometric(ratio)).unwrap();
        let vol: f64 = ball_volume(dim, r_max);
        let cells: f64 = g.cell_weights().iter().sum();
        let hats: f64 = g.weights().iter().sum();
        prop_assert!((cells - vol).abs() <= 1e-10 * vol);
        prop_assert!((hats - vol).abs() <= 1e-10 * vol);
        prop_assert!(g.weights().iter().all(|&w| w > 0.0));
        prop_assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fundamental_solution_is_p_harmonic((p, n) in subcritical_pair(), r in 0.01f64..100.0) {
        let nu = (n as f64 - p) / (p - 1.0);
        let f = PowerLaw { coef: 1.0, exponent: -nu };
        let v = radial_p_laplacian(&f, p, n, r).unwrap();
        let scale = f.d1(r).abs().powf(p - 1.0) * (1.0 + (n as f64) / r);
        prop_assert!(v.abs() <= 1e-11 * scale);
    }

    #[test]
    fn energy_is_p_homogeneous((p, n) in subcritical_pair(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], alpha in 0.0f64..2.0, decay in 0.2f64..3.0) {
        let phi = smooth_tail_profile(p, n).unwrap();
        let v = potential_from_profile(&phi, p, n).unwrap();
        let spec = ProblemSpec::new(p, n, v, bump_perturbation(1.0, 1.0).unwrap(), alpha).unwrap();
        let g = Arc::new(make_grid(n, 10.0, 300, Grading::Uniform).unwrap());
        let u = RadialField::from_fn(g, |r| (-decay * r).exp() * (1.0 + r));
        let e1 = energy(&spec, &u).unwrap();
        let e2 = energy(&spec, &u.scaled(c)).unwrap();
        let k = c.abs().powf(p);
        for (a, b) in [(e1.kinetic, e2.kinetic), (e1.potential_v, e2.potential_v), (e1.potential_w, e2.potential_w), (e1.mass, e2.mass)] {
            prop_assert!((b - k * a).abs() <= 1e-11 * (k * a).abs().max(1e-300));
        }
        let q1 = rayleigh(&spec, &u).unwrap();
        let q2 = rayleigh(&spec, &u.scaled(c)).unwrap();
        prop_assert!((q1 - q2).abs() <= 1e-11 * q1.abs().max(1e-12));
    }

    #[test]
    fn capacity_closed_form_matches_minimization((p, n) in subcritical_pair(), r in 1.5f64..20.0) {
        let cp = CapacityProblem::new(p, n, r).unwrap();
        let closed = capacity_value(&cp, CapacityMode::ClosedForm).unwrap();
        let discrete = capacity_value(&cp, CapacityMode::DiscreteMin { cells: 2000 }).unwrap();
        // the discrete minimum is taken over a subspace, so it can only sit above
        prop_assert!(discrete >= closed * (1.0 - 1e-12));
        prop_assert!((discrete - closed) <= 1e-3 * closed);
    }

    #[test]
    fn nu_one_constants((p, n) in subcritical_pair()) {
        let nu1 = (n as f64 - 1.0) / (p - 1.0);
        let (a, b) = constants_a_b(nu1, p, n);
        prop_assert!((a - (1.0 - n as f64)).abs() < 1e-10);
        prop_assert!((b - (1.0 - n as f64)).abs() < 1e-10);
        let nu0 = (n as f64 - p) / (p - 1.0);
        prop_assert!(constants_a_b(nu0, p, n).1.abs() < 1e-10);
    }

    #[test]
    fn v_alpha_is_a_supersolution(p in 2.0f64..4.0, extra in 1usize..5, lambda in -0.1f64..-1e-4, r_lo in 0.5f64..20.0) {
        let n = p.floor() as usize + extra;
        let s = Supersolution::new(Family::VAlpha, p, n, lambda, 1.0).unwrap();
        // beyond μr ≈ 150 the profile underflows
        let radii: Vec<f64> = (0..50)
            .map(|k| r_lo * 1.1f64.powi(k))
            .filter(|&r| s.mu * r <= 150.0)
            .collect();
        for sample in supersolution_residual(&s, &radii).unwrap() {
            prop_assert!(sample.closed_form <= 1e-10);
            prop_assert!(sample.direct <= 1e-10);
            prop_assert!(sample.discrepancy <= 1e-8);
        }
    }

    #[test]
    fn gamma_branches_agree(x in 0.3f64..3.0) {
        let s = incomplete_gamma_zero_series(x);
        let c = incomplete_gamma_zero_cf(x);
        prop_assert!((s - c).abs() <= 1e-10 * s.abs().max(1e-3));
    }

    #[test]
    fn gamma_is_positive_and_decreasing(x in 1e-4f64..40.0, dx in 1e-3f64..1.0) {
        let a = incomplete_gamma_zero(x).unwrap();
        let b = incomplete_gamma_zero(x + dx).unwrap();
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn potential_table_round_trip(values in proptest::collection::vec(-10.0f64..10.0, 2..40), step in 0.01f64..1.0) {
        let radii: Vec<f64> = (0..values.len()).map(|k| k as f64 * step).collect();
        let pot = Potential::table(radii.clone(), values.clone()).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &pot, &radii, 2.5, 4).unwrap();
        let (p, n, back): (f64, usize, _) = read_table(&buf[..]).unwrap();
        prop_assert_eq!(p, 2.5);
        prop_assert_eq!(n, 4);
        for (&r, &v) in radii.iter().zip(&values) {
            prop_assert_eq!(back.value(r), v);
        }
    }

    #[test]
    fn power_fit_is_exact_on_power_data(q in 0.5f64..4.0, c in 0.01f64..100.0, lo in -20.0f64..-8.0) {
        let curve: Vec<(f64, f64)> = (0..6).map(|k| {
            let a = (lo + 1.5 * k as f64).exp2();
            (a, -c * a.powf(q))
        }).collect();
        let f = fit_power(&curve).unwrap();
        prop_assert!((f.exponent.unwrap() - q).abs() < 1e-9);
        prop_assert!((f.constant - c).abs() < 1e-8 * c);
        prop_assert!(!f.misfit);
    }

    #[test]
    fn log_corrected_fit_recovers_constant(c in 0.01f64..10.0) {
        let curve: Vec<(f64, f64)> = (3..10).map(|k| {
            let a = 0.5f64.powi(k);
            (a, -c * a / a.ln().abs())
        }).collect();
        let f = fit_log_corrected(&curve).unwrap();
        prop_assert!((f.constant - c).abs() < 1e-10 * c);
        prop_assert!((f.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn richardson_is_exact_for_one_correction(l in -1.0f64..1.0, b in -5.0f64..5.0, q in 0.25f64..2.0) {
        let y = |a: f64| l + b * a.powf(q);
        let est = richardson(0.01, y(0.01), 0.04, y(0.04), q);
        prop_assert!((est - l).abs() < 1e-10);
    }

    #[test]
    fn predicted_exponent_follows_regime((p, n) in subcritical_pair()) {
        let phi = smooth_tail_profile(p, n).unwrap();
        let v = potential_from_profile(&phi, p, n).unwrap();
        let spec = ProblemSpec::new(p, n, v, bump_perturbation(1.0, 1.0).unwrap(), 0.0).unwrap();
        let pr = predict(&spec).unwrap();
        let nf = n as f64;
        match spec.regime() {
            Regime::Superlinear => prop_assert!((pr.exponent - p * (p - 1.0) / (nf - p)).abs() < 1e-12 && pr.exponent > 1.0),
            Regime::LogCorrected => prop_assert!(pr.log_corrected),
            Regime::Linear => prop_assert!(pr.limit_constant.unwrap() < 0.0),
            r => prop_assert!(false, "unexpected regime {:?}", r),
        }
    }

    #[test]
    fn signed_pow_is_odd(x in -100.0f64..100.0, e in 1.1f64..5.0) {
        prop_assert_eq!(x.signed_pow(e), -(-x).signed_pow(e));
        prop_assert!((x.signed_pow(e).abs() - x.abs().powf(e - 1.0)).abs() <= 1e-12 * x.abs().powf(e - 1.0));
    }

    #[test]
    fn linear_fields_integrate_exactly(dim in 1usize..6, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = Arc::new(make_grid(dim, 2.0, 37, Grading::Geometric(1.03)).unwrap());
        let f = RadialField::from_fn(Arc::clone(&g), |r| a + b * r);
        let nf = dim as f64;
        let area = ball_volume::<f64>(dim, 1.0) * nf;
        let exact = area * (a * 2f64.powf(nf) / nf + b * 2f64.powf(nf + 1.0) / (nf + 1.0));
        prop_assert!((integrate(&f) - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }
}
