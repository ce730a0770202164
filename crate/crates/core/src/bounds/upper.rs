//! Upper bounds for `λ(α)` from the trial functions `f_{α,t} φ₀`.
//!
//! `f(x) = 1` for `|x| ≤ 1` and `e^{1-|x|}` beyond; `f_{α,t}(x) = f(s x)` with
//! `s = t α^{(p-1)/(N-p)}`. Since `φ₀` solves the critical equation, integration by parts gives
//! `Q₀[fφ₀] = ∫ |a+b|^p - |a|^p - p|a|^{p-2}ab` with `a = fφ₀'`, `b = φ₀f'`, whose integrand is
//! pointwise nonnegative and vanishes where `f` is constant.

use serde::{Deserialize, Serialize};

use crate::energy::{ProblemSpec, Regime};
use crate::error::{invalid, Error, Result};
use crate::potentials::{GroundStateProfile, ProfileShape};
use crate::radial::{gauss_legendre, sphere_area, RadialFunction};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction<T> {
    pub t: T,
    pub alpha: T,
    /// `s = t α^{(p-1)/(N-p)}`
    pub scale: T,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(p: T, dim: usize, alpha: T, t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(invalid(format!("t must be positive, got {t}")));
        }
        if !(alpha > T::zero()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        let n = T::from_usize_lossy(dim);
        if !(n > p) {
            return Err(invalid("test-function family needs p < N"));
        }
        let scale = t * alpha.powf((p - T::one()) / (n - p));
        Ok(Self { t, alpha, scale })
    }

    /// `R_α = 1/s`, radius of the plateau.
    pub fn plateau_radius(&self) -> T {
        T::one() / self.scale
    }

    pub fn value(&self, r: T) -> T {
        let x = self.scale * r;
        if x <= T::one() {
            T::one()
        } else {
            (T::one() - x).exp()
        }
    }

    pub fn d1(&self, r: T) -> T {
        let x = self.scale * r;
        if x <= T::one() {
            T::zero()
        } else {
            -self.scale * (T::one() - x).exp()
        }
    }
}

/// Terms of the Rayleigh quotient of the trial function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundTerms<T> {
    /// `Q₀[u]`
    pub kinetic: T,
    /// `∫ W |u|^p`
    pub potential_w: T,
    /// `∫ |u|^p`
    pub mass: T,
    /// `(Q₀[u] - α ∫W|u|^p) / ∫|u|^p`
    pub bound: T,
}

/// Panel edges on `[a, b]` with relative growth at most 10% and absolute width `≤ max_width`.
fn panel_edges<T: Scalar>(a: T, b: T, max_width: T) -> Vec<T> {
    let mut edges = vec![a];
    let mut x = a;
    let min_width = lit::<T>(0.01).min(max_width);
    while x < b {
        let w = (x * lit(0.1)).max(min_width).min(max_width);
        x = (x + w).min(b);
        edges.push(x);
    }
    edges
}

/// `|S^{N-1}| ∫ g(r) r^{N-1} dr` over the union of intervals between sorted breakpoints.
fn radial_integral<T: Scalar>(
    dim: usize,
    breaks: &[T],
    max_width: T,
    g: impl Fn(T) -> T,
) -> T {
    let area = sphere_area::<T>(dim);
    let n1 = (dim - 1) as i32;
    let mut acc = T::zero();
    for w in breaks.windows(2) {
        if !(w[1] > w[0]) {
            continue;
        }
        let edges = panel_edges(w[0], w[1], max_width);
        for e in edges.windows(2) {
            acc = acc + gauss_legendre(e[0], e[1], |r| g(r) * r.powi(n1));
        }
    }
    acc * area
}

fn profile_breaks<T: Scalar>(gs: &GroundStateProfile<T>) -> Vec<T> {
    match gs.shape() {
        ProfileShape::Glued { r0, .. } => vec![*r0 * lit(0.5), *r0],
        _ => Vec::new(),
    }
}

fn sorted_breaks<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    v.dedup();
    v
}

fn ground_state_of<T: Scalar>(spec: &ProblemSpec<T>) -> Result<GroundStateProfile<T>> {
    spec.ground_state()
        .ok_or_else(|| invalid("upper bounds need a known ground state for V"))
}

/// `‖φ₀‖_p^p` over all of `R^N` (power-law tail summed analytically beyond `10⁶`).
pub fn ground_state_mass<T: Scalar>(gs: &GroundStateProfile<T>) -> Result<T> {
    let p = gs.p();
    let dim = gs.dim();
    let n = T::from_usize_lossy(dim);
    let decay = -gs.tail_exponent() * p;
    if !(decay > n) {
        return Err(Error::Domain("ground state is not in L^p (needs N > p^2)".into()));
    }
    let far = lit::<T>(1e6);
    let mut breaks = profile_breaks(gs);
    breaks.extend([T::zero(), far]);
    let breaks = sorted_breaks(breaks);
    let body = radial_integral(dim, &breaks, far, |r| gs.value(r).powf(p));
    let tail = sphere_area::<T>(dim) * gs.value(far).powf(p) * far.powf(n) / (decay - n);
    Ok(body + tail)
}

/// `ω = ∫ W φ₀^p`, integrated over the support of `W` with Gauss-Legendre panels.
pub fn omega<T: Scalar>(spec: &ProblemSpec<T>) -> Result<T> {
    let gs = ground_state_of(spec)?;
    let p = spec.p;
    let rw = spec
        .w
        .support_radius()
        .ok_or_else(|| invalid("W needs a finite support radius"))?;
    let mut breaks = profile_breaks(&gs);
    breaks.extend([T::zero(), rw]);
    let breaks: Vec<T> = sorted_breaks(breaks).into_iter().filter(|&r| r <= rw).collect();
    Ok(radial_integral(spec.dim, &breaks, lit(0.05), |r| {
        spec.w.value(r) * gs.value(r).powf(p)
    }))
}

/// Rayleigh quotient of `f_{α,t} φ₀` (`f ≡ 1` when `N > p²`, where `t` is ignored).
pub fn upper_bound_terms<T: Scalar>(spec: &ProblemSpec<T>, t: T) -> Result<UpperBoundTerms<T>> {
    let alpha = spec.alpha;
    if !(alpha > T::zero()) {
        return Err(invalid("upper bounds need alpha > 0"));
    }
    let gs = ground_state_of(spec)?;
    let p = spec.p;
    match spec.regime() {
        Regime::Linear => {
            let mass = ground_state_mass(&gs)?;
            let w = omega(spec)?;
            return Ok(UpperBoundTerms {
                kinetic: T::zero(),
                potential_w: w,
                mass,
                bound: -alpha * w / mass,
            });
        }
        Regime::Superlinear | Regime::LogCorrected => {}
        r => {
            return Err(Error::UnsupportedRegime(format!(
                "test-function bound not defined for regime {r}"
            )))
        }
    }
    let f = TestFunction::new(p, spec.dim, alpha, t)?;
    let ra = f.plateau_radius();
    let tail_end = ra + lit::<T>(60.0) / (p * f.scale);
    let mut breaks = profile_breaks(&gs);
    let rw = spec.w.support_radius().unwrap_or(tail_end);
    breaks.extend([T::zero(), ra, rw.min(tail_end), tail_end]);
    let breaks = sorted_breaks(breaks);
    let width = lit::<T>(0.25) / (p * f.scale);

    let mass = radial_integral(spec.dim, &breaks, width, |r| {
        (f.value(r) * gs.value(r)).powf(p)
    });
    let wbreaks: Vec<T> = breaks.iter().copied().filter(|&r| r <= rw).collect();
    let potential_w = radial_integral(spec.dim, &wbreaks, width.min(lit(0.05)), |r| {
        spec.w.value(r) * (f.value(r) * gs.value(r)).powf(p)
    });
    let outer: Vec<T> = breaks.iter().copied().filter(|&r| r >= ra).collect();
    let two = lit::<T>(2.0);
    let kinetic = radial_integral(spec.dim, &outer, width, |r| {
        let a = f.value(r) * gs.d1(r);
        let b = gs.value(r) * f.d1(r);
        let aa = a.abs();
        let lead = if aa > T::zero() {
            p * aa.powf(p - two) * a * b
        } else {
            T::zero()
        };
        ((a + b).abs().powf(p) - aa.powf(p) - lead).max(T::zero())
    });
    Ok(UpperBoundTerms {
        kinetic,
        potential_w,
        mass,
        bound: (kinetic - alpha * potential_w) / mass,
    })
}

pub fn upper_bound_lambda<T: Scalar>(spec: &ProblemSpec<T>, t: T) -> Result<T> {
    Ok(upper_bound_terms(spec, t)?.bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBound<T> {
    /// `None` when the bound does not depend on `t` (`N > p²`).
    pub t_star: Option<T>,
    pub bound: T,
    /// Sampled bound decreases then increases in `t`.
    pub unimodal: bool,
    /// Bound at `t = 1e-3`, reported for `N = p²`.
    pub bound_at_smallest_t: Option<T>,
}

pub const T_RANGE: (f64, f64) = (1e-3, 10.0);

/// Minimizes `upper_bound_lambda` over `t ∈ [1e-3, 10]`: 41 log-spaced samples, then
/// golden-section refinement around the best sample when the samples are unimodal.
pub fn optimize_upper_bound<T: Scalar>(spec: &ProblemSpec<T>) -> Result<OptimizedBound<T>> {
    if spec.regime() == Regime::Linear {
        return Ok(OptimizedBound {
            t_star: None,
            bound: upper_bound_lambda(spec, T::one())?,
            unimodal: true,
            bound_at_smallest_t: None,
        });
    }
    let (lo, hi) = (lit::<T>(T_RANGE.0).ln(), lit::<T>(T_RANGE.1).ln());
    let k = 41;
    let xs: Vec<T> = (0..k)
        .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(k - 1))
        .collect();
    let ys = xs
        .iter()
        .map(|&x| upper_bound_lambda(spec, x.exp()))
        .collect::<Result<Vec<T>>>()?;
    let best = (0..k)
        .min_by(|&a, &b| ys[a].partial_cmp(&ys[b]).expect("finite bounds"))
        .expect("nonempty");
    let slack = lit::<T>(1e-12) * ys[best].abs();
    let unimodal = (1..=best).all(|i| ys[i] <= ys[i - 1] + slack)
        && (best + 1..k).all(|i| ys[i] + slack >= ys[i - 1]);
    let smallest = (spec.regime() == Regime::LogCorrected).then_some(ys[0]);
    if !unimodal || best == 0 || best == k - 1 {
        return Ok(OptimizedBound {
            t_star: Some(xs[best].exp()),
            bound: ys[best],
            unimodal,
            bound_at_smallest_t: smallest,
        });
    }
    let g = lit::<T>(0.618_033_988_749_894_8);
    let (mut a, mut b) = (xs[best - 1], xs[best + 1]);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = upper_bound_lambda(spec, c.exp())?;
    let mut fd = upper_bound_lambda(spec, d.exp())?;
    for _ in 0..80 {
        if (b - a).abs() < lit(1e-9) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = upper_bound_lambda(spec, c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = upper_bound_lambda(spec, d.exp())?;
        }
    }
    let (x, y) = if fc < fd { (c, fc) } else { (d, fd) };
    let (x, y) = if y <= ys[best] { (x, y) } else { (xs[best], ys[best]) };
    Ok(OptimizedBound {
        t_star: Some(x.exp()),
        bound: y,
        unimodal,
        bound_at_smallest_t: smallest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{
        bump_perturbation, glued_power_profile, potential_from_profile, smooth_tail_profile,
    };

    fn spec(p: f64, n: usize, glued: bool, alpha: f64) -> ProblemSpec<f64> {
        let phi = if glued {
            glued_power_profile(p, n, 2.0).unwrap()
        } else {
            smooth_tail_profile(p, n).unwrap()
        };
        let v = potential_from_profile(&phi, p, n).unwrap();
        ProblemSpec::new(p, n, v, bump_perturbation(1.0, 1.0).unwrap(), alpha).unwrap()
    }

    #[test]
    fn test_function_shape() {
        let f = TestFunction::new(2.0f64, 3, 0.25, 2.0).unwrap();
        assert!((f.scale - 0.5).abs() < 1e-15);
        assert_eq!(f.value(1.9), 1.0);
        assert!((f.value(4.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(TestFunction::new(2.0f64, 3, 0.25, 0.0).is_err());
    }

    #[test]
    fn omega_matches_closed_form_p2_n4() {
        // glued profile is 1 on the support of the bump: ω = 2π² ∫₀¹ (1-r²)² r³ dr = π²/12
        let w = omega(&spec(2.0, 4, true, 0.1)).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 12.0;
        assert!((w / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_mass_p2_n5() {
        let gs = smooth_tail_profile(2.0f64, 5).unwrap();
        let m = ground_state_mass(&gs).unwrap();
        let exact = std::f64::consts::PI.powi(3) / 2.0;
        assert!((m / exact - 1.0).abs() < 1e-6, "{m}");
        assert!(ground_state_mass(&smooth_tail_profile(2.0f64, 3).unwrap()).is_err());
    }

    #[test]
    fn linear_regime_bound_is_exact_quotient() {
        let s = spec(2.0, 5, false, 0.01);
        let b = upper_bound_lambda(&s, 1.0).unwrap();
        let expected = -0.01 * 0.242_600_724_554_827_77 / (std::f64::consts::PI.powi(3) / 2.0);
        assert!((b / expected - 1.0).abs() < 1e-6, "{b} vs {expected}");
        assert_eq!(upper_bound_lambda(&s, 3.0).unwrap(), b);
    }

    #[test]
    fn bound_negative_after_optimization() {
        let s = spec(2.0, 3, true, 0.1);
        let opt = optimize_upper_bound(&s).unwrap();
        assert!(opt.bound < 0.0 && opt.unimodal);
        assert!(opt.bound <= upper_bound_lambda(&s, 1.0).unwrap());
    }

    #[test]
    fn kinetic_term_matches_direct_gradient_form() {
        // Q₀[u] = ∫|u'|^p + ∫V|u|^p evaluated directly on a fine grid
        let s = spec(3.0, 7, false, 0.1);
        let terms = upper_bound_terms(&s, 1.0).unwrap();
        let gs = s.ground_state().unwrap();
        let f = TestFunction::new(3.0, 7, 0.1, 1.0).unwrap();
        let end = f.plateau_radius() + 60.0 / (3.0 * f.scale);
        let breaks = vec![0.0, f.plateau_radius(), end];
        let direct = radial_integral(7, &breaks, 0.05, |r| {
            let u = f.value(r) * gs.value(r);
            let du = f.d1(r) * gs.value(r) + f.value(r) * gs.d1(r);
            du.abs().powi(3) + s.v.value(r) * u.abs().powi(3)
        });
        assert!((terms.kinetic / direct - 1.0).abs() < 1e-6, "{} {}", terms.kinetic, direct);
    }

    #[test]
    fn mass_scaling_in_alpha() {
        // ∫ f^p φ₀^p ≍ α^{(p²-N)/(p-N)} at fixed t
        let m = |a: f64| upper_bound_terms(&spec(2.0, 3, true, a), 1.0).unwrap().mass;
        let slope = (m(1e-4).ln() - m(1e-3).ln()) / (1e-4f64.ln() - 1e-3f64.ln());
        assert!((slope / -1.0 - 1.0).abs() < 0.05, "{slope}");
    }
}
