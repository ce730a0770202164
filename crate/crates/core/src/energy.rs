//! Energy functionals `Q_{αW}[u] = ∫|∇u|^p + ∫V|u|^p - α∫W|u|^p`, the Rayleigh quotient and the
//! simplified (ground-state representation) energy.
//!
//! Gradients are cell differences `(u_{j+1} - u_j)/h_j` weighted by exact shell volumes, and the
//! potential terms use the grid's node weights. When `V` comes from a known ground state its nodal
//! values are the discrete inverse of the same kinetic operator, so `φ₀` is an exact discrete
//! zero-energy solution and no spurious negative spectrum appears.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::potentials::{GroundStateProfile, Potential};
use crate::radial::{RadialField, RadialFunction, RadialGrid};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `N < p`
    BelowP,
    /// `N = p`
    EqualP,
    /// `p < N < p²`
    Superlinear,
    /// `N = p²`
    LogCorrected,
    /// `N > p²`
    Linear,
}

impl Regime {
    pub fn classify<T: Scalar>(p: T, dim: usize) -> Regime {
        let n = T::from_usize_lossy(dim);
        let tol = lit::<T>(1e-9);
        let p2 = p * p;
        if (n - p).abs() <= tol {
            Regime::EqualP
        } else if n < p {
            Regime::BelowP
        } else if (n - p2).abs() <= tol * p2 {
            Regime::LogCorrected
        } else if n < p2 {
            Regime::Superlinear
        } else {
            Regime::Linear
        }
    }

    /// Exponent `q` of the weak-coupling order `|λ(α)| ≍ α^q` (log factor dropped at `N = p²`).
    pub fn order_exponent<T: Scalar>(&self, p: T, dim: usize) -> Option<T> {
        let n = T::from_usize_lossy(dim);
        match self {
            Regime::BelowP => Some(p / (p - n)),
            Regime::EqualP => None,
            Regime::Superlinear => Some(p * (p - T::one()) / (n - p)),
            Regime::LogCorrected | Regime::Linear => Some(T::one()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::BelowP => "N<p",
            Regime::EqualP => "N=p",
            Regime::Superlinear => "p<N<p^2",
            Regime::LogCorrected => "N=p^2",
            Regime::Linear => "N>p^2",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// `(p, N, V, W, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec<T> {
    pub p: T,
    pub dim: usize,
    pub v: Potential<T>,
    pub w: Potential<T>,
    pub alpha: T,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn new(p: T, dim: usize, v: Potential<T>, w: Potential<T>, alpha: T) -> Result<Self> {
        let spec = Self { p, dim, v, w, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > T::one()) || !self.p.is_finite() {
            return Err(invalid(format!("p must lie in (1, inf), got {}", self.p)));
        }
        if self.dim < 2 {
            return Err(invalid(format!("N must be at least 2, got {}", self.dim)));
        }
        if !(self.alpha >= T::zero()) {
            return Err(invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if T::from_usize_lossy(self.dim) <= self.p && !self.v.is_zero() {
            return Err(invalid(format!(
                "p >= N (p={}, N={}) is only supported with V = 0",
                self.p, self.dim
            )));
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.p, self.dim)
    }

    /// `ν₀ = (N-p)/(p-1)`.
    pub fn nu0(&self) -> T {
        (T::from_usize_lossy(self.dim) - self.p) / (self.p - T::one())
    }

    /// `ν₁ = (N-1)/(p-1)`.
    pub fn nu1(&self) -> T {
        (T::from_usize_lossy(self.dim) - T::one()) / (self.p - T::one())
    }

    /// Sobolev exponent `Np/(N-p)`; `None` when `N ≤ p`.
    pub fn sobolev_exponent(&self) -> Option<T> {
        let n = T::from_usize_lossy(self.dim);
        (n > self.p).then(|| n * self.p / (n - self.p))
    }

    /// Ground state of `-Δ_p + V`: the profile `V` was built from, or `φ ≡ 1` when `V = 0` and `N < p`.
    pub fn ground_state(&self) -> Option<GroundStateProfile<T>> {
        if let Some(g) = self.v.ground_state() {
            return Some(g.clone());
        }
        if self.v.is_zero() && T::from_usize_lossy(self.dim) < self.p {
            return Some(crate::potentials::constant_profile(self.p, self.dim));
        }
        None
    }
}

/// `EnergyBreakdown::total` is `kinetic + potential_v - α potential_w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub potential_v: T,
    pub potential_w: T,
    pub total: T,
    pub mass: T,
}

/// `|s|^{p-2} s`.
#[inline]
pub(crate) fn phi_p<T: Scalar>(s: T, p: T) -> T {
    s.signed_pow(p)
}

/// Discrete problem on one grid: nodal potentials, cell and node weights.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    grid: Arc<RadialGrid<T>>,
    p: T,
    alpha: T,
    /// `1/h_j`
    inv_h: Vec<T>,
    v: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> Discretization<T> {
    pub fn new(spec: &ProblemSpec<T>, grid: Arc<RadialGrid<T>>) -> Result<Self> {
        spec.validate()?;
        if grid.dim() != spec.dim {
            return Err(invalid(format!(
                "grid dimension {} does not match N={}",
                grid.dim(),
                spec.dim
            )));
        }
        let inv_h = (0..grid.intervals())
            .map(|j| T::one() / grid.spacing(j))
            .collect();
        let mut d = Self {
            p: spec.p,
            alpha: spec.alpha,
            inv_h,
            v: spec.v.sample(&grid),
            w: spec.w.sample(&grid),
            grid,
        };
        if let Some(gs) = spec.v.ground_state() {
            d.v = d.consistent_potential(gs);
        }
        Ok(d)
    }

    /// Nodal `V` for which the sampled `φ` solves the discrete equation at every node.
    fn consistent_potential(&self, gs: &GroundStateProfile<T>) -> Vec<T> {
        let phi: Vec<T> = self.grid.nodes().iter().map(|&r| gs.value(r)).collect();
        let flux = self.kinetic_gradient(&phi);
        let m = self.grid.weights();
        flux.iter()
            .zip(&phi)
            .zip(m)
            .map(|((&f, &u), &mi)| -f / (mi * u.powf(self.p - T::one())))
            .collect()
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    pub fn inv_spacing(&self) -> &[T] {
        &self.inv_h
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    /// `∂/∂u_i (1/p) Σ_j c_j |Δu_j/h_j|^p`.
    pub fn kinetic_gradient(&self, u: &[T]) -> Vec<T> {
        let c = self.grid.cell_weights();
        let mut g = vec![T::zero(); u.len()];
        for j in 0..c.len() {
            let s = (u[j + 1] - u[j]) * self.inv_h[j];
            let f = c[j] * phi_p(s, self.p) * self.inv_h[j];
            g[j] = g[j] - f;
            g[j + 1] = g[j + 1] + f;
        }
        g
    }

    pub fn energy(&self, u: &[T]) -> EnergyBreakdown<T> {
        let c = self.grid.cell_weights();
        let m = self.grid.weights();
        let p = self.p;
        let mut kinetic = T::zero();
        for j in 0..c.len() {
            kinetic = kinetic + c[j] * ((u[j + 1] - u[j]) * self.inv_h[j]).abs().powf(p);
        }
        let (mut mass, mut pv, mut pw) = (T::zero(), T::zero(), T::zero());
        for i in 0..u.len() {
            let a = m[i] * u[i].abs().powf(p);
            mass = mass + a;
            pv = pv + a * self.v[i];
            pw = pw + a * self.w[i];
        }
        EnergyBreakdown {
            kinetic,
            potential_v: pv,
            potential_w: pw,
            total: kinetic + pv - self.alpha * pw,
            mass,
        }
    }

    pub fn rayleigh(&self, u: &[T]) -> Result<T> {
        let e = self.energy(u);
        if !(e.mass > T::zero()) {
            return Err(Error::ZeroMass);
        }
        Ok(e.total / e.mass)
    }
}

fn check_field<T: Scalar>(spec: &ProblemSpec<T>, u: &RadialField<T>) -> Result<Discretization<T>> {
    Discretization::new(spec, Arc::clone(u.grid()))
}

/// All five energy terms of `u` by quadrature on its grid.
pub fn energy<T: Scalar>(spec: &ProblemSpec<T>, u: &RadialField<T>) -> Result<EnergyBreakdown<T>> {
    Ok(check_field(spec, u)?.energy(u.values()))
}

/// `Q_{αW}[u] / ‖u‖_p^p`.
pub fn rayleigh<T: Scalar>(spec: &ProblemSpec<T>, u: &RadialField<T>) -> Result<T> {
    check_field(spec, u)?.rayleigh(u.values())
}

/// `∫ φ₀² |∇v|² (v|∇φ₀| + φ₀|∇v|)^{p-2} dx` with `v = u/φ₀`, cell-midpoint rule.
pub fn simplified_energy<T: Scalar>(
    phi0: &RadialField<T>,
    u: &RadialField<T>,
    p: T,
) -> Result<T> {
    if !Arc::ptr_eq(phi0.grid(), u.grid()) && phi0.grid().nodes() != u.grid().nodes() {
        return Err(invalid("fields live on different grids"));
    }
    if !phi0.is_positive() {
        return Err(invalid("ground-state field must be positive at every node"));
    }
    let grid = phi0.grid();
    let c = grid.cell_weights();
    let (f, uu) = (phi0.values(), u.values());
    let half = lit::<T>(0.5);
    let mut total = T::zero();
    for j in 0..c.len() {
        let ih = T::one() / grid.spacing(j);
        let (v0, v1) = (uu[j] / f[j], uu[j + 1] / f[j + 1]);
        let dv = ((v1 - v0) * ih).abs();
        if dv == T::zero() {
            continue;
        }
        let dphi = ((f[j + 1] - f[j]) * ih).abs();
        let fm = (f[j] + f[j + 1]) * half;
        let vm = (v0 + v1) * half;
        let inner = vm.abs() * dphi + fm * dv;
        total = total + c[j] * fm * fm * dv * dv * inner.powf(p - lit(2.0));
    }
    Ok(total)
}

/// `[min, max]` of `Q₀[u] / simplified_energy(u)` over the trials, skipping `0/0` trials.
pub fn two_sided_check<T: Scalar>(
    spec: &ProblemSpec<T>,
    trials: &[RadialField<T>],
) -> Result<(T, T)> {
    let gs = spec
        .ground_state()
        .ok_or_else(|| invalid("two-sided check needs a known ground state"))?;
    let q0 = spec.with_alpha(T::zero());
    let floor = lit::<T>(1e-12);
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for u in trials {
        if u.values().iter().any(|&x| x < T::zero()) {
            return Err(invalid("trials must be nonnegative"));
        }
        let phi0 = RadialField::from_fn(Arc::clone(u.grid()), |r| gs.value(r));
        let q = energy(&q0, u)?.total;
        let s = simplified_energy(&phi0, u, spec.p)?;
        if q.abs() < floor && s.abs() < floor {
            continue;
        }
        let ratio = q / s;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}
