//! Critical potentials `V`, perturbations `W`, and the ground-state profiles they are built from.
//!
//! A critical `V` is produced by inverting the equation `-Δ_p φ + V φ^{p-1} = 0` for a prescribed
//! positive profile `φ`, which then is the ground state of `-Δ_p + V` exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial::{make_grid, radial_p_laplacian, Grading, RadialFunction, RadialGrid};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileShape<T> {
    /// `(1 + r^2)^{-ν/2}`.
    SmoothTail { nu: T },
    /// 1 on `[0, R₀/2]`, quintic Hermite blend on `[R₀/2, R₀]`, `c r^{-ν}` beyond.
    Glued { r0: T, nu: T, coef: T, poly: [T; 6] },
    /// `φ ≡ 1`, the ground state of `-Δ_p` when `N < p`.
    Constant,
}

/// Positive radial ground state normalized by `φ(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateProfile<T> {
    p: T,
    dim: usize,
    shape: ProfileShape<T>,
}

fn check_subcritical_pair<T: Scalar>(p: T, dim: usize) -> Result<T> {
    let n = T::from_usize_lossy(dim);
    if !(p > T::one()) {
        return Err(invalid(format!("p must exceed 1, got {p}")));
    }
    if p >= n {
        return Err(invalid(format!(
            "decaying ground state needs p < N, got p={p}, N={dim}"
        )));
    }
    Ok((n - p) / (p - T::one()))
}

/// `φ₀(r) = (1 + r²)^{-ν₀/2}` with `ν₀ = (N-p)/(p-1)`.
pub fn smooth_tail_profile<T: Scalar>(p: T, dim: usize) -> Result<GroundStateProfile<T>> {
    let nu = check_subcritical_pair(p, dim)?;
    Ok(GroundStateProfile {
        p,
        dim,
        shape: ProfileShape::SmoothTail { nu },
    })
}

/// Profile equal to 1 near the origin and to the p-harmonic power `c r^{-ν₀}` for `r ≥ R₀`.
///
/// The constant is `c = (R₀/2)^{ν₀}`, so the power branch continued inward would reach 1 exactly
/// where the blend starts. The induced potential vanishes identically outside `B_{R₀}`.
pub fn glued_power_profile<T: Scalar>(
    p: T,
    dim: usize,
    r0: T,
) -> Result<GroundStateProfile<T>> {
    let nu = check_subcritical_pair(p, dim)?;
    if !(r0 >= T::one()) {
        return Err(invalid(format!("gluing radius must be at least 1, got {r0}")));
    }
    let a = r0 * lit(0.5);
    let h = r0 - a;
    let coef = a.powf(nu);
    let y1 = coef * r0.powf(-nu);
    let dy1 = -nu * y1 / r0;
    let ddy1 = nu * (nu + T::one()) * y1 / (r0 * r0);
    let poly = quintic_hermite([T::one(), T::zero(), T::zero()], [y1, dy1 * h, ddy1 * h * h]);
    Ok(GroundStateProfile {
        p,
        dim,
        shape: ProfileShape::Glued { r0, nu, coef, poly },
    })
}

/// `φ ≡ 1` (ground state of `-Δ_p` on `R^N` when `N < p`, with `V = 0`).
pub fn constant_profile<T: Scalar>(p: T, dim: usize) -> GroundStateProfile<T> {
    GroundStateProfile {
        p,
        dim,
        shape: ProfileShape::Constant,
    }
}

/// Monomial coefficients in `t ∈ [0,1]` of the quintic matching value and the first two
/// t-derivatives at both ends.
fn quintic_hermite<T: Scalar>(left: [T; 3], right: [T; 3]) -> [T; 6] {
    let l = |x: f64| lit::<T>(x);
    let basis: [[f64; 6]; 6] = [
        [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
        [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
        [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
        [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
        [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
        [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
    ];
    let data = [left[0], left[1], left[2], right[0], right[1], right[2]];
    let mut out = [T::zero(); 6];
    for (row, &y) in basis.iter().zip(&data) {
        for k in 0..6 {
            out[k] = out[k] + y * l(row[k]);
        }
    }
    out
}

fn poly_eval<T: Scalar>(c: &[T; 6], t: T) -> (T, T, T) {
    let mut v = T::zero();
    let mut d = T::zero();
    let mut dd = T::zero();
    for k in (0..6).rev() {
        dd = dd * t + d * lit(2.0);
        d = d * t + v;
        v = v * t + c[k];
    }
    (v, d, dd)
}

impl<T: Scalar> GroundStateProfile<T> {
    pub fn p(&self) -> T {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &ProfileShape<T> {
        &self.shape
    }

    /// `(p - N)/(p - 1)`, the power of `r` governing the decay at infinity.
    pub fn tail_exponent(&self) -> T {
        match self.shape {
            ProfileShape::Constant => T::zero(),
            _ => (self.p - T::from_usize_lossy(self.dim)) / (self.p - T::one()),
        }
    }

    /// Radius beyond which the profile is exactly a power law (if any).
    pub fn exact_power_radius(&self) -> Option<T> {
        match self.shape {
            ProfileShape::Glued { r0, .. } => Some(r0),
            _ => None,
        }
    }

    fn eval(&self, r: T) -> (T, T, T) {
        match &self.shape {
            ProfileShape::Constant => (T::one(), T::zero(), T::zero()),
            ProfileShape::SmoothTail { nu } => {
                let nu = *nu;
                let s = T::one() + r * r;
                let half = lit::<T>(0.5);
                let v = s.powf(-nu * half);
                let d1 = -nu * r * v / s;
                let d2 = -nu * v / s + nu * (nu + lit(2.0)) * r * r * v / (s * s);
                (v, d1, d2)
            }
            ProfileShape::Glued { r0, nu, coef, poly } => {
                let a = *r0 * lit(0.5);
                if r <= a {
                    (T::one(), T::zero(), T::zero())
                } else if r < *r0 {
                    let h = *r0 - a;
                    let (v, d, dd) = poly_eval(poly, (r - a) / h);
                    (v, d / h, dd / (h * h))
                } else {
                    let v = *coef * r.powf(-*nu);
                    (v, -*nu * v / r, *nu * (*nu + T::one()) * v / (r * r))
                }
            }
        }
    }
}

impl<T: Scalar> RadialFunction<T> for GroundStateProfile<T> {
    fn value(&self, r: T) -> T {
        self.eval(r).0
    }
    fn d1(&self, r: T) -> T {
        self.eval(r).1
    }
    fn d2(&self, r: T) -> T {
        self.eval(r).2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialShape<T> {
    Zero,
    /// `a · max(0, 1 - (r/ρ)²)²`.
    Bump { radius: T, amplitude: T },
    /// `a · (1 - tanh((r - ρ)/w)) / 2`, a steep stand-in for the indicator of `B_ρ`.
    SmoothStep { radius: T, width: T, amplitude: T },
    /// `V = Δ_p φ / φ^{p-1}` for a prescribed ground state `φ`.
    FromProfile { profile: GroundStateProfile<T> },
    /// Tabulated values, linearly interpolated, zero beyond the last radius.
    Table { radii: Vec<T>, values: Vec<T> },
}

/// A radial potential in energy units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential<T> {
    shape: PotentialShape<T>,
    support_radius: Option<T>,
    decay_certificate: Option<T>,
}

impl<T: Scalar> Potential<T> {
    pub fn zero() -> Self {
        Self {
            shape: PotentialShape::Zero,
            support_radius: Some(T::zero()),
            decay_certificate: Some(T::zero()),
        }
    }

    pub fn smooth_step(radius: T, width: T, amplitude: T) -> Result<Self> {
        if !(radius > T::zero() && width > T::zero()) {
            return Err(invalid("step radius and width must be positive"));
        }
        Ok(Self {
            shape: PotentialShape::SmoothStep { radius, width, amplitude },
            support_radius: Some(radius + width * lit(40.0)),
            decay_certificate: None,
        })
    }

    /// Tabulated potential; `radii` strictly increasing and starting at 0.
    pub fn table(radii: Vec<T>, values: Vec<T>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(invalid("table needs matching radius/value columns with 2+ rows"));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("table radii must be strictly increasing"));
        }
        let last = radii[radii.len() - 1];
        Ok(Self {
            shape: PotentialShape::Table { radii, values },
            support_radius: Some(last),
            decay_certificate: None,
        })
    }

    pub fn shape(&self) -> &PotentialShape<T> {
        &self.shape
    }

    pub fn support_radius(&self) -> Option<T> {
        self.support_radius
    }

    pub fn decay_certificate(&self) -> Option<T> {
        self.decay_certificate
    }

    /// Ground state the potential was built from, when known.
    pub fn ground_state(&self) -> Option<&GroundStateProfile<T>> {
        match &self.shape {
            PotentialShape::FromProfile { profile } => Some(profile),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            PotentialShape::Zero => true,
            PotentialShape::Table { values, .. } => values.iter().all(|v| *v == T::zero()),
            PotentialShape::Bump { amplitude, .. } | PotentialShape::SmoothStep { amplitude, .. } => {
                *amplitude == T::zero()
            }
            PotentialShape::FromProfile { profile } => {
                matches!(profile.shape(), ProfileShape::Constant)
            }
        }
    }

    /// Potential multiplied by a constant factor.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let shape = match &self.shape {
            PotentialShape::Zero => PotentialShape::Zero,
            PotentialShape::Bump { radius, amplitude } => PotentialShape::Bump {
                radius: *radius,
                amplitude: *amplitude * factor,
            },
            PotentialShape::SmoothStep { radius, width, amplitude } => PotentialShape::SmoothStep {
                radius: *radius,
                width: *width,
                amplitude: *amplitude * factor,
            },
            PotentialShape::Table { radii, values } => PotentialShape::Table {
                radii: radii.clone(),
                values: values.iter().map(|&v| v * factor).collect(),
            },
            PotentialShape::FromProfile { .. } => {
                return Err(invalid("rescaling a critical potential breaks criticality"))
            }
        };
        Ok(Self {
            shape,
            support_radius: self.support_radius,
            decay_certificate: self.decay_certificate.map(|c| c * factor.abs()),
        })
    }

    pub fn value(&self, r: T) -> T {
        if let Some(rs) = self.support_radius {
            if r > rs {
                return T::zero();
            }
        }
        match &self.shape {
            PotentialShape::Zero => T::zero(),
            PotentialShape::Bump { radius, amplitude } => {
                let x = r / *radius;
                let s = T::one() - x * x;
                if s <= T::zero() {
                    T::zero()
                } else {
                    *amplitude * s * s
                }
            }
            PotentialShape::SmoothStep { radius, width, amplitude } => {
                *amplitude * lit(0.5) * (T::one() - ((r - *radius) / *width).tanh())
            }
            PotentialShape::FromProfile { profile } => induced_potential(profile, r),
            PotentialShape::Table { radii, values } => {
                let i = match radii.binary_search_by(|x| x.partial_cmp(&r).expect("finite")) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                if i == 0 {
                    values[0]
                } else if i >= radii.len() {
                    T::zero()
                } else {
                    let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
                    values[i - 1] * (T::one() - t) + values[i] * t
                }
            }
        }
    }

    /// Samples at every node of a grid.
    pub fn sample(&self, grid: &RadialGrid<T>) -> Vec<T> {
        grid.nodes().iter().map(|&r| self.value(r)).collect()
    }
}

fn induced_potential<T: Scalar>(profile: &GroundStateProfile<T>, r: T) -> T {
    let phi = profile.value(r);
    let minus_plap = radial_p_laplacian(profile, profile.p(), profile.dim(), r)
        .expect("ground-state profiles are regular at the origin");
    -minus_plap / phi.powf(profile.p() - T::one())
}

/// `W(r) = a · max(0, 1 - (r/ρ)²)²`.
pub fn bump_perturbation<T: Scalar>(radius: T, amplitude: T) -> Result<Potential<T>> {
    if !(radius > T::zero()) {
        return Err(invalid(format!("bump radius must be positive, got {radius}")));
    }
    Ok(Potential {
        shape: PotentialShape::Bump { radius, amplitude },
        support_radius: Some(radius),
        decay_certificate: None,
    })
}

fn dense_samples<T: Scalar>(upper: T) -> Vec<T> {
    let mut out = vec![T::zero()];
    let mut r = lit::<T>(1e-3);
    let step = lit::<T>(1.01);
    while r < upper {
        out.push(r);
        r = r * step;
    }
    // linear sweep through the region where blends and bumps live
    for k in 0..=2000 {
        out.push(lit::<T>(k as f64 * 5e-3));
    }
    out.push(upper);
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out
}

/// `V := Δ_p φ / φ^{p-1}`, which makes `φ` an exact positive solution of `-Δ_p u + V u^{p-1} = 0`.
///
/// Sets the support radius when the profile is an exact p-harmonic power beyond some radius
/// (verified by sampling), and a Fuchsian constant `C ≥ sup |V| (1+r²)^{p/2}` from dense sampling.
pub fn potential_from_profile<T: Scalar>(
    profile: &GroundStateProfile<T>,
    p: T,
    dim: usize,
) -> Result<Potential<T>> {
    if (profile.p() - p).abs() > lit(1e-12) || profile.dim() != dim {
        return Err(invalid("profile was built for a different (p, N)"));
    }
    let samples = dense_samples::<T>(lit(1e4));
    if samples.iter().any(|&r| !(profile.value(r) > T::zero())) {
        return Err(invalid("profile must be positive everywhere"));
    }
    let mut pot = Potential {
        shape: PotentialShape::FromProfile {
            profile: profile.clone(),
        },
        support_radius: None,
        decay_certificate: None,
    };
    if let Some(r0) = profile.exact_power_radius() {
        let tol = lit::<T>(1e-8);
        let outside_ok = samples
            .iter()
            .filter(|&&r| r > r0)
            .all(|&r| induced_potential(profile, r).abs() <= tol);
        if outside_ok {
            pot.support_radius = Some(r0);
        }
    }
    if matches!(profile.shape(), ProfileShape::Constant) {
        pot.support_radius = Some(T::zero());
    }
    let half_p = p * lit(0.5);
    let sup = samples
        .iter()
        .map(|&r| pot.value(r).abs() * (T::one() + r * r).powf(half_p))
        .fold(T::zero(), T::max);
    if sup.is_finite() {
        pot.decay_certificate = Some(sup);
    }
    Ok(pot)
}

/// `∫ W φ₀^p dx`; positive values satisfy the standing sign condition on the perturbation.
pub fn check_condition<T: Scalar>(
    w: &Potential<T>,
    profile: &GroundStateProfile<T>,
    p: T,
) -> Result<T> {
    if w.is_zero() {
        return Ok(T::zero());
    }
    let dim = profile.dim();
    let grid = match w.support_radius() {
        Some(rs) if rs > T::zero() => make_grid(dim, rs, 4000, Grading::Uniform)?,
        _ => make_grid(dim, lit(1e4), 4000, Grading::Geometric(lit(1.005)))?,
    };
    Ok(grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .fold(T::zero(), |acc, (&r, &wt)| {
            acc + wt * w.value(r) * profile.value(r).powf(p)
        }))
}

/// Writes `# radial-potential p=<p> N=<N>` followed by one `r value` row per node.
pub fn write_table<T: Scalar, W: Write>(
    out: &mut W,
    potential: &Potential<T>,
    radii: &[T],
    p: T,
    dim: usize,
) -> Result<()> {
    writeln!(out, "# radial-potential p={p} N={dim}")?;
    for &r in radii {
        writeln!(out, "{} {}", r, potential.value(r))?;
    }
    Ok(())
}

/// Parses the table format written by [`write_table`]; returns `(p, N, potential)`.
pub fn read_table<T: Scalar, R: BufRead>(input: R) -> Result<(T, usize, Potential<T>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty potential table".into()))??;
    let rest = header
        .trim()
        .strip_prefix("# radial-potential")
        .ok_or_else(|| Error::Parse(format!("bad header line: {header}")))?;
    let (mut p, mut dim) = (None, None);
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("p=") {
            p = Some(v.parse::<T>().map_err(|_| Error::Parse(format!("bad p: {v}")))?);
        } else if let Some(v) = tok.strip_prefix("N=") {
            dim = Some(v.parse::<usize>().map_err(|_| Error::Parse(format!("bad N: {v}")))?);
        }
    }
    let p = p.ok_or_else(|| Error::Parse("header lacks p=".into()))?;
    let dim = dim.ok_or_else(|| Error::Parse("header lacks N=".into()))?;
    let (mut radii, mut values) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Parse(format!("row {}: expected two columns", k + 2)));
        };
        radii.push(a.parse::<T>().map_err(|_| Error::Parse(format!("row {}: bad r", k + 2)))?);
        values.push(b.parse::<T>().map_err(|_| Error::Parse(format!("row {}: bad value", k + 2)))?);
    }
    Ok((p, dim, Potential::table(radii, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_tail_examples() {
        let phi = smooth_tail_profile(2.0f64, 3).unwrap();
        assert!((phi.value(1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(phi.value(0.0), 1.0);
        assert_eq!(smooth_tail_profile(2.0f64, 5).unwrap().tail_exponent(), -3.0);
        assert_eq!(smooth_tail_profile(3.0f64, 7).unwrap().tail_exponent(), -2.0);
        assert!(smooth_tail_profile(3.0f64, 3).is_err());
        assert!(smooth_tail_profile(4.0f64, 3).is_err());
    }

    #[test]
    fn smooth_tail_derivatives_match_finite_differences() {
        let phi = smooth_tail_profile(2.5f64, 6).unwrap();
        let h = 1e-5;
        for &r in &[0.3, 1.0, 4.0] {
            let fd1 = (phi.value(r + h) - phi.value(r - h)) / (2.0 * h);
            let fd2 = (phi.d1(r + h) - phi.d1(r - h)) / (2.0 * h);
            assert!((fd1 - phi.d1(r)).abs() < 1e-8);
            assert!((fd2 - phi.d2(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn smooth_tail_potential_p2_n3() {
        let phi = smooth_tail_profile(2.0f64, 3).unwrap();
        let v = potential_from_profile(&phi, 2.0, 3).unwrap();
        assert!((v.value(0.0) + 3.0).abs() < 1e-12);
        for &r in &[0.5, 1.0, 3.0, 40.0] {
            let exact = -3.0 * (1.0f64 + r * r).powi(-2);
            assert!((v.value(r) - exact).abs() < 1e-12 * exact.abs().max(1e-3));
        }
        assert!(v.support_radius().is_none());
    }

    #[test]
    fn smooth_tail_decay_certificate_p2_n5() {
        let phi = smooth_tail_profile(2.0f64, 5).unwrap();
        let v = potential_from_profile(&phi, 2.0, 5).unwrap();
        let c = v.decay_certificate().unwrap();
        assert!(c <= 15.0 + 1e-9, "C={c}");
        assert!(c >= 14.9);
    }

    #[test]
    fn glued_profile_tail_and_support() {
        let phi = glued_power_profile(2.0f64, 3, 2.0).unwrap();
        let c = phi.value(2.0) * 2.0;
        for &r in &[2.0, 3.0, 10.0, 1e3] {
            assert!((phi.value(r) * r - c).abs() < 1e-12);
        }
        let v = potential_from_profile(&phi, 2.0, 3).unwrap();
        assert_eq!(v.support_radius(), Some(2.0));
        for &r in &[2.0 + 1e-9, 2.5, 10.0] {
            assert!(v.value(r).abs() < 1e-8);
        }
        // nonzero somewhere in the blend
        assert!((1.0..2.0).any_sample(|r| v.value(r).abs() > 1e-3));
    }

    trait AnySample {
        fn any_sample(&self, f: impl Fn(f64) -> bool) -> bool;
    }
    impl AnySample for std::ops::Range<f64> {
        fn any_sample(&self, f: impl Fn(f64) -> bool) -> bool {
            (0..100).any(|k| f(self.start + (self.end - self.start) * k as f64 / 100.0))
        }
    }

    #[test]
    fn glued_profile_is_c2_and_monotone() {
        let phi = glued_power_profile(3.0f64, 5, 4.0).unwrap();
        let eps = 1e-9;
        for &r in &[2.0, 4.0] {
            assert!((phi.value(r - eps) - phi.value(r + eps)).abs() < 1e-8);
            assert!((phi.d1(r - eps) - phi.d1(r + eps)).abs() < 1e-7);
            assert!((phi.d2(r - eps) - phi.d2(r + eps)).abs() < 1e-6);
        }
        let mut prev = phi.value(0.0);
        for k in 1..=200_000 {
            let r = k as f64 * 1e-3;
            let v = phi.value(r);
            assert!(v <= prev + 1e-15, "not monotone at r={r}");
            prev = v;
        }
    }

    #[test]
    fn profile_construction_residual_vanishes() {
        for phi in [
            smooth_tail_profile(2.0f64, 3).unwrap(),
            smooth_tail_profile(3.0f64, 7).unwrap(),
            glued_power_profile(2.0f64, 4, 2.0).unwrap(),
        ] {
            let (p, n) = (phi.p(), phi.dim());
            let v = potential_from_profile(&phi, p, n).unwrap();
            for &r in &[0.0, 0.2, 1.1, 1.7, 5.0, 60.0] {
                let res = radial_p_laplacian(&phi, p, n, r).unwrap()
                    + v.value(r) * phi.value(r).powf(p - 1.0);
                assert!(res.abs() < 1e-10, "r={r} res={res}");
            }
        }
    }

    #[test]
    fn tail_slope_matches_exponent() {
        for phi in [
            smooth_tail_profile(2.0f64, 5).unwrap(),
            glued_power_profile(2.0f64, 5, 2.0).unwrap(),
            smooth_tail_profile(3.0f64, 7).unwrap(),
        ] {
            let slope = (phi.value(200.0).ln() - phi.value(50.0).ln()) / (200.0f64 / 50.0).ln();
            let expected = phi.tail_exponent();
            assert!((slope / expected - 1.0).abs() < 0.02, "{slope} vs {expected}");
        }
    }

    #[test]
    fn ground_state_bounds_in_the_tail() {
        let phi = smooth_tail_profile(2.0f64, 3).unwrap();
        let nu = -phi.tail_exponent();
        let vals: Vec<f64> = (2..2000).map(|k| phi.value(k as f64) * (k as f64).powf(nu)).collect();
        let (lo, hi) = vals.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(lo > 0.5 && hi < 1.5);
    }

    #[test]
    fn bump_values_and_sign_condition() {
        let w = bump_perturbation(1.0f64, 1.0).unwrap();
        assert_eq!(w.value(0.0), 1.0);
        assert_eq!(w.value(1.0), 0.0);
        assert_eq!(w.value(2.0), 0.0);
        let phi = smooth_tail_profile(2.0f64, 3).unwrap();
        let pos = check_condition(&w, &phi, 2.0).unwrap();
        assert!(pos > 0.0);
        let neg = check_condition(&bump_perturbation(1.0f64, -1.0).unwrap(), &phi, 2.0).unwrap();
        assert!((neg + pos).abs() < 1e-14);
        assert_eq!(check_condition(&Potential::zero(), &phi, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn check_condition_matches_fine_quadrature() {
        // ∫_0^1 (1-r²)² (1+r²)^{-1} r² dr · 4π by composite Simpson with 2·10^5 panels.
        let f = |r: f64| (1.0 - r * r).powi(2) / (1.0 + r * r) * r * r;
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        let exact = 4.0 * std::f64::consts::PI * s * h / 3.0;
        let w = bump_perturbation(1.0f64, 1.0).unwrap();
        let phi = smooth_tail_profile(2.0f64, 3).unwrap();
        let got = check_condition(&w, &phi, 2.0).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn table_round_trip() {
        let phi = glued_power_profile(2.0f64, 3, 2.0).unwrap();
        let v = potential_from_profile(&phi, 2.0, 3).unwrap();
        let radii: Vec<f64> = (0..300).map(|k| k as f64 * 0.01).collect();
        let mut buf = Vec::new();
        write_table(&mut buf, &v, &radii, 2.0, 3).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# radial-potential p=2 N=3\n"));
        let (p, n, back) = read_table::<f64, _>(&buf[..]).unwrap();
        assert_eq!((p, n), (2.0, 3));
        for &r in &radii {
            assert_eq!(back.value(r), v.value(r));
        }
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(read_table::<f64, _>(&b"r v\n0 1\n"[..]).is_err());
        assert!(read_table::<f64, _>(&b"# radial-potential p=2\n0 1\n1 2\n"[..]).is_err());
        assert!(read_table::<f64, _>(&b"# radial-potential p=2 N=3\n0 1 2\n"[..]).is_err());
    }
}
