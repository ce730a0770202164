use std::sync::Arc;

use pcrit::asymptotics::{check_w_scaling, curve_pairs, fit_power};
use pcrit::bounds::{comparison_ratio, upper_bound_lambda, Family, Supersolution};
use pcrit::eigensolver::{lambda_curve, solve_ground_state, CurveOptions, SolverConfig};
use pcrit::energy::ProblemSpec;
use pcrit::potentials::{
    bump_perturbation, glued_power_profile, potential_from_profile, smooth_tail_profile, Potential,
};
use pcrit::radial::{make_grid, Grading, GridPlan, RadialFunction};

fn critical(p: f64, dim: usize, glued: bool) -> ProblemSpec<f64> {
    let phi = if glued {
        glued_power_profile(p, dim, 2.0).unwrap()
    } else {
        smooth_tail_profile(p, dim).unwrap()
    };
    let v = potential_from_profile(&phi, p, dim).unwrap();
    ProblemSpec::new(p, dim, v, bump_perturbation(1.0, 1.0).unwrap(), 0.0).unwrap()
}

fn options() -> CurveOptions<f64> {
    CurveOptions::new(
        GridPlan::Geometric {
            min_spacing: 2e-3,
            ratio: 1.005,
        },
        20.0,
        1e7,
    )
}

fn alphas(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 0.5f64.powi(k)).collect()
}

#[test]
fn ratio_to_alpha_vanishes_and_ground_state_is_recovered() {
    let spec = critical(2.0, 3, true);
    let pts = lambda_curve(&spec, &alphas(2..=8), &SolverConfig::default(), &options()).unwrap();
    let ratios: Vec<f64> = pts
        .iter()
        .map(|p| p.outcome.as_ref().unwrap().lambda / p.alpha)
        .collect();
    let tail = &ratios[ratios.len() - 3..];
    assert!(tail[0].abs() > tail[1].abs() && tail[1].abs() > tail[2].abs(), "{ratios:?}");

    let phi0 = spec.ground_state().unwrap();
    let local_error: Vec<f64> = pts
        .iter()
        .map(|p| {
            let f = p.outcome.as_ref().unwrap().normalized_at_origin();
            f.grid()
                .nodes()
                .iter()
                .zip(f.values())
                .filter(|(&r, _)| r <= 5.0)
                .map(|(&r, &u)| (u - phi0.value(r)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(local_error.windows(2).all(|w| w[1] < w[0]), "{local_error:?}");
}

#[test]
fn minimizer_dominates_the_lower_comparison_profile() {
    let spec = critical(2.0, 4, true).with_alpha(0.25);
    let grid = Arc::new(
        GridPlan::Geometric {
            min_spacing: 2e-3,
            ratio: 1.005,
        }
        .build(4, 400.0)
        .unwrap(),
    );
    let res = solve_ground_state(&spec, grid, &SolverConfig::default(), None).unwrap();
    let s = Supersolution::new(Family::VAlpha, 2.0, 4, res.lambda, 1.0).unwrap();
    let (c, worst) = comparison_ratio(&res.eigenfunction, &s, 2.0, 200.0).unwrap();
    assert!(c > 0.0);
    assert!(worst >= 1.0 - 1e-6, "min ratio {worst}");
}

#[test]
fn trial_functions_bound_the_eigenvalue_from_above() {
    let cfg = SolverConfig::default();
    for (p, n) in [(2.0, 3usize), (3.0, 7)] {
        let spec = critical(p, n, true);
        let pts = lambda_curve(&spec, &alphas(2..=4), &cfg, &options()).unwrap();
        for pt in &pts {
            let l = pt.outcome.as_ref().unwrap().lambda;
            for t in [0.01, 0.1, 1.0, 5.0] {
                let b = upper_bound_lambda(&spec.with_alpha(pt.alpha), t).unwrap();
                assert!(b >= l - cfg.lambda_tolerance(l), "p={p} N={n} a={} t={t}: {b} < {l}", pt.alpha);
            }
        }
    }
}

#[test]
fn coupling_scaling_matches_order() {
    let amps = [0.5, 1.0, 2.0, 4.0, 8.0];
    let cfg = SolverConfig::default();
    let s3 = check_w_scaling(&critical(2.0, 3, true), &amps, &alphas(3..=7), &cfg, &options()).unwrap();
    assert!((s3.slope - 2.0).abs() <= 0.2, "{s3:?}");
    assert!(s3.nested);
    let s5 = check_w_scaling(&critical(2.0, 5, false), &amps, &alphas(4..=8), &cfg, &options()).unwrap();
    assert!((s5.slope - 1.0).abs() <= 0.1, "{s5:?}");
    assert!(s5.nested);
    assert!(check_w_scaling(&critical(2.0, 3, true), &[-1.0, 1.0], &alphas(3..=7), &cfg, &options()).is_err());
}

#[test]
fn regime_boundary_exponents_are_ordered() {
    let cfg = SolverConfig::default();
    let q = |spec: ProblemSpec<f64>, ks| {
        let pts = lambda_curve(&spec, &alphas(ks), &cfg, &options()).unwrap();
        let f = fit_power(&curve_pairs(&pts)).unwrap();
        assert!(f.r2 >= 0.98);
        f.exponent.unwrap()
    };
    let q3 = q(critical(2.0, 3, true), 2..=8);
    let q4 = q(critical(2.0, 4, true), 3..=9);
    let q5 = q(critical(2.0, 5, false), 4..=10);
    assert!((1.85..=2.15).contains(&q3), "{q3}");
    assert!(q3 > q4 && q4 > q5, "{q3} {q4} {q5}");
    assert!((q5 - 1.0).abs() < 0.1, "{q5}");
}

#[test]
fn single_precision_ball_eigenvalue() {
    let spec = ProblemSpec::new(2.0f32, 3, Potential::zero(), Potential::zero(), 0.0).unwrap();
    let grid = Arc::new(make_grid(3, 1.0f32, 200, Grading::Uniform).unwrap());
    let cfg = SolverConfig::<f32> {
        tolerance_lambda: 1e-4,
        tolerance_residual: 1e-3,
        ..SolverConfig::default()
    };
    let res = solve_ground_state(&spec, grid, &cfg, None).unwrap();
    let pi2 = std::f32::consts::PI.powi(2);
    assert!((res.lambda / pi2 - 1.0).abs() < 1e-3, "{}", res.lambda);
}

#[test]
fn minimizer_does_not_depend_on_the_start() {
    let spec = critical(3.0, 7, true).with_alpha(0.25);
    let grid = Arc::new(
        GridPlan::Geometric {
            min_spacing: 2e-3,
            ratio: 1.005,
        }
        .build(7, 200.0)
        .unwrap(),
    );
    let solve = |seed, start: Option<&pcrit::radial::RadialField<f64>>| {
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        solve_ground_state(&spec, Arc::clone(&grid), &cfg, start).unwrap()
    };
    let a = solve(1, None);
    let b = solve(2, None);
    let warm = solve_ground_state(&spec.with_alpha(0.5), Arc::clone(&grid), &SolverConfig::default(), None).unwrap();
    let c = solve(3, Some(&warm.eigenfunction));
    let tol = SolverConfig::<f64>::default().lambda_tolerance(a.lambda);
    assert!((a.lambda - b.lambda).abs() <= tol && (a.lambda - c.lambda).abs() <= tol, "{} {} {}", a.lambda, b.lambda, c.lambda);
    let fa = a.normalized_at_origin();
    let fb = b.normalized_at_origin();
    let gap = fa.values().iter().zip(fb.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap}");
}
