//! Principal eigenvalue `λ(α)` and its positive minimizer on a Dirichlet ball.
//!
//! Each step moves along the preconditioned negative gradient of the Rayleigh quotient,
//! `d = -S(u)^{-1}(A(u) - λB(u)) / (p-1)`, where `A`, `B` are the gradients of the energy and mass
//! terms and `(p-1)S(u)` is the Hessian of `E - σ·mass` at `u` for a shift `σ` kept below the
//! current quotient. For `p = 2` and unit step this is shifted inverse iteration. The trial point
//! `|u + τd|` is renormalized to unit `L^p` mass and accepted only if the quotient does not grow.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{phi_p, Discretization, EnergyBreakdown, ProblemSpec};
use crate::error::{invalid, Error, Result};
use crate::radial::{GridPlan, RadialField, RadialFunction, RadialGrid, GRAD_EPS};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub max_iterations: usize,
    pub step_init: T,
    /// Relative stationarity `‖A - λB‖ / (|λ| ‖B‖)` (dual norms).
    pub tolerance_residual: T,
    /// Absolute tolerance on successive λ when `|λ| ≥ relative_below`.
    pub tolerance_lambda: T,
    /// Relative tolerance on successive λ when `|λ| < relative_below`.
    pub tolerance_lambda_relative: T,
    pub relative_below: T,
    pub seed: u64,
    pub backtracking: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            step_init: T::one(),
            tolerance_residual: lit(1e-6),
            tolerance_lambda: lit(1e-8),
            tolerance_lambda_relative: lit(1e-3),
            relative_below: lit(1e-5),
            seed: 0,
            backtracking: lit(0.5),
            max_backtracks: 20,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x > T::zero() && x.is_finite();
        if !(pos(self.step_init)
            && pos(self.tolerance_residual)
            && pos(self.tolerance_lambda)
            && pos(self.tolerance_lambda_relative))
        {
            return Err(invalid("step and tolerances must be positive"));
        }
        if !(self.backtracking > T::zero() && self.backtracking < T::one()) {
            return Err(invalid("backtracking factor must lie in (0, 1)"));
        }
        if self.max_iterations == 0 || self.max_backtracks == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        Ok(())
    }

    pub fn lambda_tolerance(&self, lambda: T) -> T {
        if lambda.abs() >= self.relative_below {
            self.tolerance_lambda
        } else {
            self.tolerance_lambda_relative * lambda.abs()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult<T> {
    pub lambda: T,
    /// Nonnegative, unit `L^p` mass, zero at `R_max`.
    pub eigenfunction: RadialField<T>,
    pub residual: T,
    pub r_max: T,
    pub iterations: usize,
    pub converged: bool,
    /// Rayleigh quotient after every accepted step, starting with the initial guess.
    pub lambda_history: Vec<T>,
    /// Energy terms of the eigenfunction normalized by value 1 at the origin.
    pub energy: EnergyBreakdown<T>,
}

impl<T: Scalar> SpectralResult<T> {
    /// Copy normalized by `φ(0) = 1`.
    pub fn normalized_at_origin(&self) -> RadialField<T> {
        let u0 = self.eigenfunction.values()[0];
        self.eigenfunction.scaled(T::one() / u0)
    }
}

/// LDLᵀ of a symmetric tridiagonal matrix; `None` unless positive definite.
struct Tridiag<T> {
    d: Vec<T>,
    l: Vec<T>,
}

impl<T: Scalar> Tridiag<T> {
    fn factor(diag: &[T], off: &[T]) -> Option<Self> {
        let n = diag.len();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        d.push(diag[0]);
        for i in 1..n {
            let prev = d[i - 1];
            if !(prev > T::zero()) || !prev.is_finite() {
                return None;
            }
            let li = off[i - 1] / prev;
            l.push(li);
            d.push(diag[i] - li * off[i - 1]);
        }
        (d[n - 1] > T::zero() && d[n - 1].is_finite()).then_some(Self { d, l })
    }

    fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.d.len();
        let mut x = rhs.to_vec();
        for i in 1..n {
            x[i] = x[i] - self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] = x[i] / self.d[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.l[i] * x[i + 1];
        }
        x
    }
}

struct Operator<'a, T> {
    disc: &'a Discretization<T>,
    /// `v - αw`
    q: Vec<T>,
    unknowns: usize,
}

impl<'a, T: Scalar> Operator<'a, T> {
    fn new(disc: &'a Discretization<T>) -> Self {
        let alpha = disc.alpha();
        let q = disc
            .v()
            .iter()
            .zip(disc.w())
            .map(|(&v, &w)| v - alpha * w)
            .collect();
        Self {
            disc,
            q,
            unknowns: disc.grid().len() - 1,
        }
    }

    fn mass(&self, u: &[T]) -> T {
        let p = self.disc.p();
        u.iter()
            .zip(self.disc.grid().weights())
            .fold(T::zero(), |a, (&x, &m)| a + m * x.abs().powf(p))
    }

    fn normalize(&self, u: &mut [T]) -> Result<()> {
        let mass = self.mass(u);
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        let s = mass.powf(-T::one() / self.disc.p());
        u.iter_mut().for_each(|x| *x = *x * s);
        Ok(())
    }

    /// `(A(u), B(u))` restricted to the free nodes.
    fn gradients(&self, u: &[T]) -> (Vec<T>, Vec<T>) {
        let p = self.disc.p();
        let m = self.disc.grid().weights();
        let mut a = self.disc.kinetic_gradient(u);
        a.truncate(self.unknowns);
        let mut b = Vec::with_capacity(self.unknowns);
        for i in 0..self.unknowns {
            let bi = m[i] * phi_p(u[i], p);
            a[i] = a[i] + self.q[i] * bi;
            b.push(bi);
        }
        (a, b)
    }

    fn dual_norm(&self, x: &[T]) -> T {
        let m = self.disc.grid().weights();
        x.iter()
            .zip(m)
            .fold(T::zero(), |a, (&xi, &mi)| a + xi * xi / mi)
            .sqrt()
    }

    fn residual(&self, u: &[T], lambda: T) -> T {
        let (a, b) = self.gradients(u);
        let r: Vec<T> = a.iter().zip(&b).map(|(&ai, &bi)| ai - lambda * bi).collect();
        self.dual_norm(&r) / ((lambda.abs() + lit(1e-14)) * self.dual_norm(&b))
    }

    /// Tridiagonal `S(u) - σ·diag(m|u|^{p-2})` with `S(u)u = A(u) - σB(u)` up to regularization.
    fn shifted(&self, u: &[T], sigma: T) -> Option<Tridiag<T>> {
        let p = self.disc.p();
        let grid = self.disc.grid();
        let c = grid.cell_weights();
        let m = grid.weights();
        let ih = self.disc.inv_spacing();
        let n = self.unknowns;
        let two = lit::<T>(2.0);
        let slopes: Vec<T> = (0..n).map(|j| ((u[j + 1] - u[j]) * ih[j]).abs()).collect();
        let smax = slopes.iter().fold(T::zero(), |a, &b| a.max(b));
        let umax = u.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let eps_s = lit::<T>(GRAD_EPS) * smax + T::min_positive_value();
        let eps_u = lit::<T>(GRAD_EPS) * umax + T::min_positive_value();
        let k: Vec<T> = (0..n)
            .map(|j| c[j] * (slopes[j] + eps_s).powf(p - two) * ih[j] * ih[j])
            .collect();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let left = if i > 0 { k[i - 1] } else { T::zero() };
            let pot = m[i] * (self.q[i] - sigma) * (u[i].abs() + eps_u).powf(p - two);
            diag.push(left + k[i] + pot);
        }
        let off: Vec<T> = k[..n - 1].iter().map(|&x| -x).collect();
        Tridiag::factor(&diag, &off)
    }
}

fn default_initial<T: Scalar>(
    spec: &ProblemSpec<T>,
    grid: &RadialGrid<T>,
    seed: u64,
) -> Vec<T> {
    let gs = spec.ground_state();
    let r_max = grid.r_max();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    grid.nodes()
        .iter()
        .map(|&r| {
            let base = gs.as_ref().map_or(T::one(), |g| g.value(r)) * (-r / r_max).exp();
            let xi: f64 = rng.gen_range(-1.0..1.0);
            base * (T::one() + lit::<T>(1e-3 * xi))
        })
        .collect()
}

fn failure<T: Scalar>(reason: impl Into<String>, it: usize, lambda: T, u: &[T]) -> Error {
    Error::SolverFailure {
        reason: reason.into(),
        iterations: it,
        last_lambda: lambda.to_f64_lossy(),
        last_iterate: u.iter().map(|x| x.to_f64_lossy()).collect(),
    }
}

/// Minimizes the Rayleigh quotient of `spec` on `grid` with `u(R_max) = 0`.
///
/// Without `initial`, starts from `φ₀ e^{-r/R_max}` (or `e^{-r/R_max}` when no ground state is
/// known) with a seeded relative perturbation of size `1e-3`.
pub fn solve_ground_state<T: Scalar>(
    spec: &ProblemSpec<T>,
    grid: Arc<RadialGrid<T>>,
    config: &SolverConfig<T>,
    initial: Option<&RadialField<T>>,
) -> Result<SpectralResult<T>> {
    config.validate()?;
    let disc = Discretization::new(spec, Arc::clone(&grid))?;
    let op = Operator::new(&disc);
    let n = op.unknowns;
    let p = spec.p;

    let mut u = match initial {
        Some(f) if Arc::ptr_eq(f.grid(), &grid) || f.grid().nodes() == grid.nodes() => {
            f.values().to_vec()
        }
        Some(f) => grid.nodes().iter().map(|&r| f.grid().interpolate(f.values(), r)).collect(),
        None => default_initial(spec, &grid, config.seed),
    };
    u.iter_mut().for_each(|x| *x = x.abs());
    u[n] = T::zero();
    op.normalize(&mut u)?;

    let mut lambda = disc.rayleigh(&u)?;
    let mut history = vec![lambda];
    let floor = lit::<T>(1e-13);
    let mut delta = (lambda.abs() * lit(0.5)).max(floor);
    let q_min = op.q.iter().fold(T::infinity(), |a, &b| a.min(b));
    let mut tau = config.step_init;
    let mut last_change = T::infinity();
    let mut converged = false;
    // residual progress, to detect a roundoff floor above tolerance_residual
    let mut best_residual = T::infinity();
    let mut stalled = 0usize;
    let mut iterations = 0;
    let scale = T::one() / (p - T::one());

    while iterations < config.max_iterations {
        let (a, b) = op.gradients(&u);
        let r: Vec<T> = a.iter().zip(&b).map(|(&ai, &bi)| ai - lambda * bi).collect();
        let residual = op.dual_norm(&r) / ((lambda.abs() + lit(1e-14)) * op.dual_norm(&b));
        if residual < best_residual * lit(0.5) {
            best_residual = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        let settled = last_change <= config.lambda_tolerance(lambda);
        if settled && (residual <= config.tolerance_residual || stalled >= 30) {
            converged = true;
            break;
        }
        iterations += 1;

        // shift below the spectrum of the linearization
        let cap = lambda - q_min + T::one();
        let fact = loop {
            if let Some(f) = op.shifted(&u, lambda - delta) {
                break f;
            }
            if delta >= cap {
                return Err(failure("no positive definite shift found", iterations, lambda, &u));
            }
            delta = (delta * lit(4.0)).min(cap);
        };
        let y = fact.solve(&r);

        let mut accepted = None;
        let mut step = tau;
        for _ in 0..config.max_backtracks {
            let mut cand: Vec<T> = (0..=n)
                .map(|i| {
                    if i == n {
                        T::zero()
                    } else {
                        (u[i] - step * scale * y[i]).abs()
                    }
                })
                .collect();
            if op.normalize(&mut cand).is_ok() {
                if let Ok(lc) = disc.rayleigh(&cand) {
                    if lc <= lambda {
                        accepted = Some((cand, lc));
                        break;
                    }
                }
            }
            step = step * config.backtracking;
        }
        match accepted {
            Some((cand, lc)) => {
                last_change = (lambda - lc).abs();
                u = cand;
                lambda = lc;
                history.push(lambda);
                tau = (step / config.backtracking).min(config.step_init);
                delta = (delta * lit(0.5)).max(lambda.abs() * lit(0.05)).max(floor);
            }
            None => {
                // no further decrease representable: stagnation at the minimum or divergence
                if last_change <= config.lambda_tolerance(lambda) {
                    converged = true;
                    break;
                }
                return Err(failure(
                    format!(
                        "Rayleigh quotient did not decrease over {} backtracked steps",
                        config.max_backtracks
                    ),
                    iterations,
                    lambda,
                    &u,
                ));
            }
        }
    }

    let residual = op.residual(&u, lambda);
    let eigenfunction = RadialField::new(Arc::clone(&grid), u)?;
    let origin = eigenfunction.values()[0];
    let scaled: Vec<T> = eigenfunction.values().iter().map(|&x| x / origin).collect();
    Ok(SpectralResult {
        lambda,
        energy: disc.energy(&scaled),
        eigenfunction,
        residual,
        r_max: grid.r_max(),
        iterations,
        converged,
        lambda_history: history,
    })
}

/// `μ̂ = (|λ|/(p-1))^{1/p}`, the decay rate of the minimizer; `None` unless `λ < 0`.
pub fn decay_rate<T: Scalar>(lambda: T, p: T) -> Option<T> {
    (lambda < T::zero()).then(|| (lambda.abs() / (p - T::one())).powf(T::one() / p))
}

/// Warm start on `grid` from a solution on another grid, with a small positive background.
pub fn warm_start<T: Scalar>(
    spec: &ProblemSpec<T>,
    previous: &RadialField<T>,
    grid: &Arc<RadialGrid<T>>,
) -> RadialField<T> {
    let gs = spec.ground_state();
    let r_max = grid.r_max();
    let u0 = previous.values()[0];
    RadialField::from_fn(Arc::clone(grid), |r| {
        let base = gs.as_ref().map_or(T::one(), |g| g.value(r)) * (-r / r_max).exp();
        previous.grid().interpolate(previous.values(), r) / u0 + lit::<T>(1e-3) * base
    })
}

#[derive(Debug, Clone)]
pub struct DomainResult<T> {
    /// Solution on the largest radius.
    pub result: SpectralResult<T>,
    /// `(R, λ_R)` for every radius solved.
    pub lambdas: Vec<(T, T)>,
    /// Last two radii agree within 1% relative.
    pub truncation_converged: bool,
    /// Largest radius is below `10/μ̂` for the estimate at the previous radius.
    pub schedule_too_short: bool,
}

/// Solves on each radius of an increasing schedule, warm-starting outward.
pub fn solve_with_domain_extrapolation<T: Scalar>(
    spec: &ProblemSpec<T>,
    config: &SolverConfig<T>,
    plan: &GridPlan<T>,
    schedule: &[T],
    initial: Option<&RadialField<T>>,
) -> Result<DomainResult<T>> {
    if schedule.len() < 2 {
        return Err(invalid("radius schedule needs at least two entries"));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("radius schedule must be increasing"));
    }
    let mut lambdas = Vec::with_capacity(schedule.len());
    let mut prev: Option<SpectralResult<T>> = None;
    for &r in schedule {
        let grid = Arc::new(plan.build(spec.dim, r)?);
        let start = match (&prev, initial) {
            (Some(res), _) => Some(warm_start(spec, &res.eigenfunction, &grid)),
            (None, Some(f)) => Some(warm_start(spec, f, &grid)),
            (None, None) => None,
        };
        let res = solve_ground_state(spec, Arc::clone(&grid), config, start.as_ref())?;
        lambdas.push((r, res.lambda));
        prev = Some(res);
    }
    let k = lambdas.len();
    let (l1, l2) = (lambdas[k - 2].1, lambdas[k - 1].1);
    let truncation_converged = (l2 - l1).abs() <= lit::<T>(0.01) * l2.abs().max(l1.abs())
        || (l2 - l1).abs() <= config.tolerance_lambda;
    let schedule_too_short = decay_rate(l1, spec.p)
        .map(|mu| schedule[k - 1] < lit::<T>(10.0) / mu)
        .unwrap_or(false);
    Ok(DomainResult {
        result: prev.expect("schedule nonempty"),
        lambdas,
        truncation_converged,
        schedule_too_short,
    })
}

/// Radius and grid policy for [`lambda_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions<T> {
    pub plan: GridPlan<T>,
    /// Truncation radius is at least `radius_factor / μ̂`.
    pub radius_factor: T,
    pub min_radius: T,
    pub max_radius: T,
    /// Solve also on twice the radius and report truncation convergence.
    pub truncation_check: bool,
}

impl<T: Scalar> CurveOptions<T> {
    pub fn new(plan: GridPlan<T>, min_radius: T, max_radius: T) -> Self {
        Self {
            plan,
            radius_factor: lit(10.0),
            min_radius,
            max_radius,
            truncation_check: false,
        }
    }

    fn radius_for(&self, lambda_estimate: Option<T>, p: T) -> T {
        let r = lambda_estimate
            .and_then(|l| decay_rate(l, p))
            .map_or(self.min_radius, |mu| self.radius_factor / mu);
        r.max(self.min_radius).min(self.max_radius)
    }
}

#[derive(Debug, Clone)]
pub struct CurvePoint<T> {
    pub alpha: T,
    pub outcome: Result<SpectralResult<T>, String>,
    /// `None` when the truncation check was off.
    pub truncation_converged: Option<bool>,
}

/// `λ(α)` along a decreasing list of couplings, warm-starting each solve from the previous one.
///
/// The truncation radius follows the decay of the previous minimizer, extrapolated with the
/// regime's order exponent, and grows until it exceeds `radius_factor/μ̂` (or hits `max_radius`).
/// A failed solve is recorded and the sweep continues.
pub fn lambda_curve<T: Scalar>(
    template: &ProblemSpec<T>,
    alphas: &[T],
    config: &SolverConfig<T>,
    options: &CurveOptions<T>,
) -> Result<Vec<CurvePoint<T>>> {
    lambda_curve_with(template, alphas, config, options, |_| {})
}

/// [`lambda_curve`] that hands each point to `on_point` as soon as it is solved.
pub fn lambda_curve_with<T: Scalar>(
    template: &ProblemSpec<T>,
    alphas: &[T],
    config: &SolverConfig<T>,
    options: &CurveOptions<T>,
    mut on_point: impl FnMut(&CurvePoint<T>),
) -> Result<Vec<CurvePoint<T>>> {
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("alpha list must be strictly decreasing"));
    }
    if alphas.iter().any(|&a| !(a > T::zero())) {
        return Err(invalid("alpha list must be positive"));
    }
    let q = template
        .regime()
        .order_exponent(template.p, template.dim)
        .unwrap_or(T::one());
    let mut out = Vec::with_capacity(alphas.len());
    let mut prev: Option<(T, SpectralResult<T>)> = None;
    for &alpha in alphas {
        let spec = template.with_alpha(alpha);
        let estimate = prev
            .as_ref()
            .map(|(a, res)| res.lambda * (alpha / *a).powf(q));
        let start = prev.as_ref().map(|(_, res)| res.eigenfunction.clone());
        let point = solve_adaptive(&spec, config, options, estimate, start.as_ref());
        match point {
            Ok((res, trunc)) => {
                prev = Some((alpha, res.clone()));
                out.push(CurvePoint {
                    alpha,
                    outcome: Ok(res),
                    truncation_converged: trunc,
                });
            }
            Err(e) => out.push(CurvePoint {
                alpha,
                outcome: Err(e.to_string()),
                truncation_converged: None,
            }),
        }
        on_point(out.last().expect("just pushed"));
    }
    Ok(out)
}

/// One coupling: grow the radius until it covers `radius_factor/μ̂`.
pub fn solve_adaptive<T: Scalar>(
    spec: &ProblemSpec<T>,
    config: &SolverConfig<T>,
    options: &CurveOptions<T>,
    estimate: Option<T>,
    initial: Option<&RadialField<T>>,
) -> Result<(SpectralResult<T>, Option<bool>)> {
    let mut radius = options.radius_for(estimate, spec.p);
    let mut start = initial.cloned();
    for _ in 0..12 {
        let grid = Arc::new(options.plan.build(spec.dim, radius)?);
        let warm = start.as_ref().map(|f| warm_start(spec, f, &grid));
        let res = solve_ground_state(spec, grid, config, warm.as_ref())?;
        // a bound state that has not yet appeared may need a larger ball
        let wanted = if res.lambda >= T::zero() && spec.alpha > T::zero() {
            radius * lit(2.0)
        } else {
            options.radius_for(Some(res.lambda), spec.p)
        };
        if wanted <= radius * lit(1.0001) || radius >= options.max_radius {
            if !options.truncation_check {
                return Ok((res, None));
            }
            let ext = solve_with_domain_extrapolation(
                spec,
                config,
                &options.plan,
                &[radius, radius * lit(2.0)],
                Some(&res.eigenfunction),
            )?;
            return Ok((ext.result, Some(ext.truncation_converged)));
        }
        radius = if res.lambda < T::zero() {
            wanted * lit(1.2)
        } else {
            wanted
        }
        .min(options.max_radius);
        start = Some(res.eigenfunction);
    }
    Err(invalid("truncation radius did not settle"))
}
