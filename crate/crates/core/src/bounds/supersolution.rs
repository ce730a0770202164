//! Exponentially decaying comparison profiles `r^{-ν} e^{-μβ r}`.
//!
//! For `s = r^{-ν} e^{-κ r}` the radial p-Laplacian factorizes exactly:
//! `-Δ_p s = (1-p) κ^p (1 + ν/(κr))^{p-2} [1 - A_ν/((p-1)κr) - B_ν/((p-1)κ²r²)] s^{p-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial::{radial_p_laplacian, RadialField, RadialFunction};
use crate::scalar::{lit, Scalar};

/// `A_ν = (N-1) - 2ν(p-1)`, `B_ν = ν(N - p - ν(p-1))`.
pub fn constants_a_b<T: Scalar>(nu: T, p: T, dim: usize) -> (T, T) {
    let n = T::from_usize_lossy(dim);
    let pm1 = p - T::one();
    let a = (n - T::one()) - lit::<T>(2.0) * nu * pm1;
    let b = nu * (n - p - nu * pm1);
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `ν₁ = (N-1)/(p-1)`, rate `(λ/(1-p))^{1/p}`.
    VAlpha,
    /// `ν₀ = (N-p)/(p-1)`, rate `(2λ/(1-p))^{1/p}`.
    WAlpha,
    /// `ν₀`, rate `β (λ/(1-p))^{1/p}`.
    VAlphaBeta,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::VAlpha => "v_alpha",
            Family::WAlpha => "w_alpha",
            Family::VAlphaBeta => "v_alpha_beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Supersolution<T> {
    pub family: Family,
    pub p: T,
    pub dim: usize,
    pub lambda: T,
    pub nu: T,
    pub mu: T,
    pub beta: T,
}

impl<T: Scalar> Supersolution<T> {
    pub fn new(family: Family, p: T, dim: usize, lambda: T, beta: T) -> Result<Self> {
        if !(p > T::one()) {
            return Err(invalid(format!("p must exceed 1, got {p}")));
        }
        if !(lambda < T::zero()) {
            return Err(Error::Domain(format!(
                "decay rate is real only for lambda < 0, got {lambda}"
            )));
        }
        if !(beta >= T::one()) {
            return Err(invalid(format!("stretch beta must be at least 1, got {beta}")));
        }
        let n = T::from_usize_lossy(dim);
        let pm1 = p - T::one();
        let base = lambda / (T::one() - p);
        let (nu, mu, beta) = match family {
            Family::VAlpha => ((n - T::one()) / pm1, base.powf(T::one() / p), T::one()),
            Family::WAlpha => ((n - p) / pm1, (base * lit(2.0)).powf(T::one() / p), T::one()),
            Family::VAlphaBeta => ((n - p) / pm1, base.powf(T::one() / p), beta),
        };
        if !(nu > T::zero()) {
            return Err(invalid("profile exponent must be positive (needs p < N)"));
        }
        Ok(Self {
            family,
            p,
            dim,
            lambda,
            nu,
            mu,
            beta,
        })
    }

    pub fn rate(&self) -> T {
        self.mu * self.beta
    }

    pub fn constants(&self) -> (T, T) {
        constants_a_b(self.nu, self.p, self.dim)
    }

    /// `-Δ_p s / s^{p-1}` from the bracketed closed forms.
    pub fn closed_form_ratio(&self, r: T) -> T {
        let (a, b) = self.constants();
        let p = self.p;
        let pm1 = p - T::one();
        let x = self.mu * r;
        let two = lit::<T>(2.0);
        match self.family {
            Family::VAlpha => {
                self.lambda
                    * (T::one() + self.nu / x).powf(p - two)
                    * (T::one() - a / (pm1 * x) - b / (pm1 * x * x))
            }
            Family::WAlpha => {
                // B_{ν₀} = 0
                self.lambda * two * (T::one() + self.nu / x).powf(p - two) * (T::one() - a / (pm1 * x))
            }
            Family::VAlphaBeta => {
                let xb = x * self.beta;
                self.lambda
                    * self.beta.powf(p)
                    * (T::one() + self.nu / xb).powf(p - two)
                    * (T::one() - a / (pm1 * xb))
            }
        }
    }

    /// `-Δ_p s - λ s^{p-1}` from the closed form.
    pub fn closed_form_residual(&self, r: T) -> T {
        let sp = self.value(r).powf(self.p - T::one());
        (self.closed_form_ratio(r) - self.lambda) * sp
    }

    /// `-Δ_p s - λ s^{p-1}` with the p-Laplacian evaluated from the derivatives.
    pub fn direct_residual(&self, r: T) -> Result<T> {
        let lap = radial_p_laplacian(self, self.p, self.dim, r)?;
        Ok(lap - self.lambda * self.value(r).powf(self.p - T::one()))
    }
}

impl<T: Scalar> RadialFunction<T> for Supersolution<T> {
    fn value(&self, r: T) -> T {
        r.powf(-self.nu) * (-self.rate() * r).exp()
    }
    fn d1(&self, r: T) -> T {
        -(self.nu / r + self.rate()) * self.value(r)
    }
    fn d2(&self, r: T) -> T {
        let g = self.nu / r + self.rate();
        (g * g + self.nu / (r * r)) * self.value(r)
    }
    fn singular_at_origin(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample<T> {
    pub r: T,
    pub closed_form: T,
    pub direct: T,
    /// `|closed_form - direct|` relative to the larger of the two terms `|Δ_p s|` and `|λ| s^{p-1}`.
    pub discrepancy: T,
}

/// Both residual evaluations at each radius (the origin is excluded).
pub fn supersolution_residual<T: Scalar>(
    s: &Supersolution<T>,
    radii: &[T],
) -> Result<Vec<ResidualSample<T>>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > T::zero()) {
                return Err(Error::Domain("residual samples must avoid the origin".into()));
            }
            let closed_form = s.closed_form_residual(r);
            let direct = s.direct_residual(r)?;
            let sp = s.value(r).powf(s.p - T::one());
            let scale = (s.lambda.abs() * sp).max((s.closed_form_ratio(r) * sp).abs());
            let discrepancy = if scale > T::zero() {
                (closed_form - direct).abs() / scale
            } else {
                T::zero()
            };
            Ok(ResidualSample {
                r,
                closed_form,
                direct,
                discrepancy,
            })
        })
        .collect()
}

/// Geometric samples in `[lo, hi]`.
pub fn geometric_samples<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    let count = count.max(2);
    let ratio = (hi / lo).ln() / T::from_usize_lossy(count - 1);
    (0..count)
        .map(|k| lo * (ratio * T::from_usize_lossy(k)).exp())
        .collect()
}

/// Smallest `L` on the sampled grid `μr ∈ [1e-3, x_max]` such that the closed-form residual is
/// `≤ tol` for every sample with `μr ≥ L`; `None` if even the last sample fails.
pub fn validity_threshold<T: Scalar>(s: &Supersolution<T>, x_max: T, tol: T) -> Option<T> {
    let xs = geometric_samples(lit::<T>(1e-3), x_max, 400);
    let mut threshold = None;
    for &x in xs.iter().rev() {
        if s.closed_form_residual(x / s.mu) <= tol {
            threshold = Some(x);
        } else {
            break;
        }
    }
    threshold
}

/// Smallest `β = 2^k ≤ 2^max_doublings` making the residual `≤ tol` on `[r_lo, r_hi]`.
pub fn smallest_beta<T: Scalar>(
    p: T,
    dim: usize,
    lambda: T,
    r_lo: T,
    r_hi: T,
    tol: T,
    max_doublings: u32,
) -> Result<Option<T>> {
    let radii = geometric_samples(r_lo, r_hi, 400);
    let mut beta = T::one();
    for _ in 0..=max_doublings {
        let s = Supersolution::new(Family::VAlphaBeta, p, dim, lambda, beta)?;
        if radii.iter().all(|&r| s.closed_form_residual(r) <= tol) {
            return Ok(Some(beta));
        }
        beta = beta * lit(2.0);
    }
    Ok(None)
}

/// `C = φ(R)/s(R)` and `min_{r ∈ [R, r_hi]} φ(r) / (C s(r))` over grid nodes.
pub fn comparison_ratio<T: Scalar>(
    eigen: &RadialField<T>,
    s: &Supersolution<T>,
    r_lo: T,
    r_hi: T,
) -> Result<(T, T)> {
    let grid = eigen.grid();
    if !(r_lo > T::zero() && r_hi > r_lo && r_hi <= grid.r_max()) {
        return Err(invalid("comparison interval must lie inside the grid"));
    }
    let c = eigen.at(r_lo) / s.value(r_lo);
    let mut worst = T::infinity();
    for (&r, &u) in grid.nodes().iter().zip(eigen.values()) {
        if r >= r_lo && r <= r_hi {
            let sv = s.value(r);
            if sv > T::zero() {
                worst = worst.min(u / (c * sv));
            }
        }
    }
    Ok((c, worst))
}

/// Worst sampled residual and path discrepancy of one family over its validity region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck<T> {
    pub family: Family,
    pub lambda: T,
    pub beta: T,
    /// Sampled radii `[lo, hi]`.
    pub region: (T, T),
    pub samples: usize,
    pub max_residual: T,
    pub max_discrepancy: T,
}

/// Residual checks for all three families at each `λ`.
///
/// `v_α` and `v_{α,β}` are sampled on `[r_inner, r_outer]`, with `β` the smallest power of two
/// making the residual nonpositive there; `w_α` is sampled from `L/μ` on, with `L` from
/// [`validity_threshold`]. Radii with `μβr > 200` are dropped because the profile underflows.
/// `Ok(None)` entries mark a family whose region could not be established.
pub fn supersolution_suite<T: Scalar>(
    p: T,
    dim: usize,
    lambdas: &[T],
    r_inner: T,
    r_outer: T,
) -> Result<Vec<(Family, T, Option<FamilyCheck<T>>)>> {
    if !(r_inner > T::zero() && r_outer > r_inner) {
        return Err(invalid("need 0 < r_inner < r_outer"));
    }
    let mut out = Vec::new();
    for &lambda in lambdas {
        for family in [Family::VAlpha, Family::WAlpha, Family::VAlphaBeta] {
            let beta = match family {
                Family::VAlphaBeta => {
                    match smallest_beta(p, dim, lambda, r_inner, r_outer, T::zero(), 20)? {
                        Some(b) => b,
                        None => {
                            out.push((family, lambda, None));
                            continue;
                        }
                    }
                }
                _ => T::one(),
            };
            let s = Supersolution::new(family, p, dim, lambda, beta)?;
            let (lo, hi) = match family {
                Family::WAlpha => match validity_threshold(&s, lit(1e3), T::zero()) {
                    Some(l) => {
                        let lo = l / s.mu;
                        (lo, lo.max(r_outer))
                    }
                    None => {
                        out.push((family, lambda, None));
                        continue;
                    }
                },
                _ => (r_inner, r_outer),
            };
            let limit = lit::<T>(200.0) / s.rate();
            let radii: Vec<T> = geometric_samples(lo, hi, 400)
                .into_iter()
                .filter(|&r| r <= limit)
                .collect();
            let samples = supersolution_residual(&s, &radii)?;
            let max_residual = samples
                .iter()
                .fold(T::neg_infinity(), |a, x| a.max(x.closed_form).max(x.direct));
            let max_discrepancy = samples.iter().fold(T::zero(), |a, x| a.max(x.discrepancy));
            out.push((
                family,
                lambda,
                Some(FamilyCheck {
                    family,
                    lambda,
                    beta,
                    region: (lo, hi.min(limit)),
                    samples: samples.len(),
                    max_residual,
                    max_discrepancy,
                }),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_examples() {
        for &(p, n) in &[(2.0f64, 3usize), (2.0, 4), (3.0, 7), (2.5, 6)] {
            let nu1 = (n as f64 - 1.0) / (p - 1.0);
            let (a, b) = constants_a_b(nu1, p, n);
            assert!((a - (1.0 - n as f64)).abs() < 1e-12);
            assert!((b - (1.0 - n as f64)).abs() < 1e-12);
            let nu0 = (n as f64 - p) / (p - 1.0);
            assert!(constants_a_b(nu0, p, n).1.abs() < 1e-12);
        }
        assert_eq!(constants_a_b(1.0, 2.0, 3).0, 0.0);
        assert_eq!(constants_a_b(2.0, 2.0, 4).0, -1.0);
    }

    #[test]
    fn requires_negative_lambda() {
        assert!(Supersolution::new(Family::VAlpha, 2.0f64, 3, 0.0, 1.0).is_err());
        assert!(Supersolution::new(Family::VAlpha, 2.0f64, 3, 0.1, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = Supersolution::new(Family::WAlpha, 3.0f64, 7, -0.01, 1.0).unwrap();
        let h = 1e-5;
        for &r in &[0.5, 2.0, 10.0] {
            let fd1 = (s.value(r + h) - s.value(r - h)) / (2.0 * h);
            let fd2 = (s.d1(r + h) - s.d1(r - h)) / (2.0 * h);
            assert!((fd1 / s.d1(r) - 1.0).abs() < 1e-7);
            assert!((fd2 / s.d2(r) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn v_alpha_residual_nonpositive_p2_n4() {
        let s = Supersolution::new(Family::VAlpha, 2.0f64, 4, -0.01, 1.0).unwrap();
        let radii = geometric_samples(5.0, 50.0, 100);
        for smp in supersolution_residual(&s, &radii).unwrap() {
            assert!(smp.closed_form <= 1e-10 && smp.direct <= 1e-10);
            assert!(smp.discrepancy < 1e-8);
        }
    }

    #[test]
    fn w_alpha_threshold_finite() {
        let s = Supersolution::new(Family::WAlpha, 2.0f64, 3, -0.01, 1.0).unwrap();
        let l = validity_threshold(&s, 50.0, 1e-10).unwrap();
        assert!(l.is_finite());
        let r = 10.0;
        let smp = supersolution_residual(&s, &[r]).unwrap()[0];
        assert!(smp.discrepancy < 1e-8);
    }

    #[test]
    fn beta_search_is_monotone() {
        let b = smallest_beta(2.0f64, 4, -1e-3, 1.0, 1e3, 1e-10, 10).unwrap().unwrap();
        assert_eq!(b, 1.0);
    }
}
