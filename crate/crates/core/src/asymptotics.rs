//! Weak-coupling orders of `λ(α)`: predictions per regime and fits of computed curves.

use serde::{Deserialize, Serialize};

use crate::bounds::{ground_state_mass, omega};
use crate::eigensolver::{lambda_curve, CurveOptions, CurvePoint, SolverConfig};
use crate::energy::{ProblemSpec, Regime};
use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub regime: Regime,
    /// `q` in `|λ| ≍ α^q` (1 for `N ≥ p²`, where `N = p²` adds a log factor).
    pub exponent: T,
    /// `-ω/‖φ₀‖_p^p` when `N > p²`.
    pub limit_constant: Option<T>,
    pub log_corrected: bool,
}

pub fn predict<T: Scalar>(spec: &ProblemSpec<T>) -> Result<Prediction<T>> {
    let regime = spec.regime();
    let exponent = regime
        .order_exponent(spec.p, spec.dim)
        .ok_or_else(|| Error::UnsupportedRegime("N = p has exponentially small eigenvalues".into()))?;
    let limit_constant = if regime == Regime::Linear {
        let gs = spec
            .ground_state()
            .ok_or_else(|| invalid("limit constant needs a known ground state"))?;
        Some(-omega(spec)? / ground_state_mass(&gs)?)
    } else {
        None
    };
    Ok(Prediction {
        regime,
        exponent,
        limit_constant,
        log_corrected: regime == Regime::LogCorrected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `λ = -c α^q`
    PurePower,
    /// `λ = -c α/|log α|`
    LogCorrected,
    /// `λ/α → L`
    LinearLimit,
}

impl FitModel {
    pub fn label(&self) -> &'static str {
        match self {
            FitModel::PurePower => "pure_power",
            FitModel::LogCorrected => "log_corrected",
            FitModel::LinearLimit => "linear_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit<T> {
    pub regime: Option<Regime>,
    pub model: FitModel,
    pub exponent: Option<T>,
    pub constant: T,
    pub r2: T,
    pub window: (T, T),
    pub samples: usize,
    /// Standard deviation of the exponent over leave-one-out refits.
    pub exponent_spread: Option<T>,
    /// Sample standard deviation over mean of `-λ|log α|/α`.
    pub ratio_spread: Option<T>,
    /// Exponent on the small-α half minus exponent on the large-α half.
    pub drift: Option<T>,
    /// Local exponents disagree by more than `0.02` across the window.
    pub misfit: bool,
}

/// Least squares `y = c₀ + c₁ x`; returns `(c₀, c₁, R²)`.
fn linear_fit<T: Scalar>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
        syy = syy + (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res = x
        .iter()
        .zip(y)
        .fold(T::zero(), |a, (&xi, &yi)| {
            let e = yi - icpt - slope * xi;
            a + e * e
        });
    let r2 = if syy > T::zero() { T::one() - ss_res / syy } else { T::one() };
    (icpt, slope, r2)
}

fn mean_std<T: Scalar>(v: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = v.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean))
        / (n - T::one()).max(T::one());
    (mean, var.sqrt())
}

fn sorted_curve<T: Scalar>(curve: &[(T, T)]) -> Result<Vec<(T, T)>> {
    if curve.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    if let Some(&(a, l)) = curve.iter().find(|&&(a, l)| !(l < T::zero()) || !(a > T::zero())) {
        return Err(Error::RegimeViolation(format!(
            "fit needs alpha > 0 and lambda < 0, got ({a}, {l})"
        )));
    }
    let mut c = curve.to_vec();
    c.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite alpha"));
    Ok(c)
}

fn window<T: Scalar>(c: &[(T, T)]) -> (T, T) {
    (c[0].0, c[c.len() - 1].0)
}

/// Log-log least squares of `-λ` against `α`.
///
/// Requires at least 4 samples spanning at least 1.5 decades.
pub fn fit_power<T: Scalar>(curve: &[(T, T)]) -> Result<AsymptoticFit<T>> {
    let c = sorted_curve(curve)?;
    let (lo, hi) = window(&c);
    if c.len() < 4 || (hi / lo).log10() < lit::<T>(1.5) - lit::<T>(1e-9) {
        return Err(invalid("power fit needs >= 4 samples spanning >= 1.5 decades"));
    }
    let x: Vec<T> = c.iter().map(|s| s.0.ln()).collect();
    let y: Vec<T> = c.iter().map(|s| (-s.1).ln()).collect();
    let (icpt, q, r2) = linear_fit(&x, &y);
    let loo: Vec<T> = (0..x.len())
        .map(|k| {
            let xs: Vec<T> = x.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &v)| v).collect();
            let ys: Vec<T> = y.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &v)| v).collect();
            linear_fit(&xs, &ys).1
        })
        .collect();
    let spread = mean_std(&loo).1 * (T::from_usize_lossy(loo.len() - 1)).sqrt();
    let h = x.len() / 2;
    let q_small = linear_fit(&x[..=h], &y[..=h]).1;
    let q_large = linear_fit(&x[h..], &y[h..]).1;
    let drift = q_small - q_large;
    Ok(AsymptoticFit {
        regime: None,
        model: FitModel::PurePower,
        exponent: Some(q),
        constant: icpt.exp(),
        r2,
        window: (lo, hi),
        samples: c.len(),
        exponent_spread: Some(spread),
        ratio_spread: None,
        drift: Some(drift),
        misfit: drift.abs() > lit(0.02),
    })
}

/// `c` in `λ ≈ -c α/|log α|`: the mean of `-λ|log α|/α` with its relative spread.
///
/// `r2` is measured in `log(-λ)` against the best one-constant log-space fit, which makes it
/// comparable with the pure-power `r2`.
pub fn fit_log_corrected<T: Scalar>(curve: &[(T, T)]) -> Result<AsymptoticFit<T>> {
    let c = sorted_curve(curve)?;
    if c.iter().any(|s| !(s.0 < T::one())) {
        return Err(invalid("log-corrected fit needs alpha < 1"));
    }
    let ratios: Vec<T> = c.iter().map(|&(a, l)| -l * a.ln().abs() / a).collect();
    let (mean, std) = mean_std(&ratios);
    let y: Vec<T> = c.iter().map(|s| (-s.1).ln()).collect();
    let g: Vec<T> = c.iter().map(|&(a, _)| (a / a.ln().abs()).ln()).collect();
    let n = T::from_usize_lossy(y.len());
    let shift = y.iter().zip(&g).fold(T::zero(), |acc, (&yi, &gi)| acc + yi - gi) / n;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut ss_res, mut ss_tot) = (T::zero(), T::zero());
    for (&yi, &gi) in y.iter().zip(&g) {
        ss_res = ss_res + (yi - gi - shift) * (yi - gi - shift);
        ss_tot = ss_tot + (yi - my) * (yi - my);
    }
    Ok(AsymptoticFit {
        regime: None,
        model: FitModel::LogCorrected,
        exponent: None,
        constant: mean,
        r2: if ss_tot > T::zero() { T::one() - ss_res / ss_tot } else { T::one() },
        window: window(&c),
        samples: c.len(),
        exponent_spread: None,
        ratio_spread: Some(std / mean),
        drift: None,
        misfit: false,
    })
}

/// Leading correction exponent of `λ/α` near its limit when `N > p²`: `min(ν₀ - N/p, 1)`.
pub fn linear_correction_exponent<T: Scalar>(p: T, dim: usize) -> T {
    let n = T::from_usize_lossy(dim);
    ((n - p) / (p - T::one()) - n / p).min(T::one())
}

/// Extrapolates `λ/α = L + b α^q` to `α → 0` by least squares (Richardson for two samples).
pub fn fit_linear_limit<T: Scalar>(curve: &[(T, T)], correction: T) -> Result<AsymptoticFit<T>> {
    let c = sorted_curve(curve)?;
    if !(correction > T::zero()) {
        return Err(invalid("correction exponent must be positive"));
    }
    let x: Vec<T> = c.iter().map(|&(a, _)| a.powf(correction)).collect();
    let y: Vec<T> = c.iter().map(|&(a, l)| l / a).collect();
    let (limit, _, r2) = linear_fit(&x, &y);
    Ok(AsymptoticFit {
        regime: None,
        model: FitModel::LinearLimit,
        exponent: Some(T::one()),
        constant: limit,
        r2,
        window: window(&c),
        samples: c.len(),
        exponent_spread: None,
        ratio_spread: None,
        drift: None,
        misfit: false,
    })
}

/// Two-point Richardson extrapolation of `y(α) = L + b α^q`.
pub fn richardson<T: Scalar>(a1: T, y1: T, a2: T, y2: T, q: T) -> T {
    let (w1, w2) = (a1.powf(q), a2.powf(q));
    (y2 * w1 - y1 * w2) / (w1 - w2)
}

/// Fit matched to the regime of `spec`: log-corrected at `N = p²`, linear limit when `N > p²`,
/// pure power otherwise.
pub fn fit_for_regime<T: Scalar>(spec: &ProblemSpec<T>, curve: &[(T, T)]) -> Result<AsymptoticFit<T>> {
    let regime = spec.regime();
    let mut fit = match regime {
        Regime::LogCorrected => fit_log_corrected(curve)?,
        Regime::Linear => fit_linear_limit(curve, linear_correction_exponent(spec.p, spec.dim))?,
        Regime::EqualP => {
            return Err(Error::UnsupportedRegime("N = p".into()));
        }
        _ => fit_power(curve)?,
    };
    fit.regime = Some(regime);
    Ok(fit)
}

/// Converged `(α, λ)` pairs of a computed curve.
pub fn curve_pairs<T: Scalar>(points: &[CurvePoint<T>]) -> Vec<(T, T)> {
    points
        .iter()
        .filter_map(|pt| pt.outcome.as_ref().ok().map(|r| (pt.alpha, r.lambda)))
        .collect()
}

/// Second divided differences `f[α₀, α₁, α₂]` of a curve sorted by α.
pub fn second_divided_differences<T: Scalar>(curve: &[(T, T)]) -> Vec<T> {
    let mut c = curve.to_vec();
    c.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite alpha"));
    c.windows(3)
        .map(|w| {
            let d01 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let d12 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            (d12 - d01) / (w[2].0 - w[0].0)
        })
        .collect()
}

/// Discrete concavity: every second divided difference is at most `tol`.
pub fn is_concave<T: Scalar>(curve: &[(T, T)], tol: T) -> bool {
    second_divided_differences(curve).into_iter().all(|d| d <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WScaling<T> {
    /// `(amplitude, c(amplitude))` with the α-exponent held at its predicted value.
    pub rows: Vec<(T, T)>,
    pub slope: T,
    pub predicted_slope: T,
    /// `λ(α)` is nonincreasing in the amplitude at every sampled α.
    pub nested: bool,
}

/// Sweeps `λ(α)` for `W` scaled by each amplitude and regresses `log c(a)` on `log a`.
pub fn check_w_scaling<T: Scalar>(
    template: &ProblemSpec<T>,
    amplitudes: &[T],
    alphas: &[T],
    config: &SolverConfig<T>,
    options: &CurveOptions<T>,
) -> Result<WScaling<T>> {
    if amplitudes.iter().any(|&a| !(a > T::zero())) {
        return Err(invalid("amplitudes must be positive"));
    }
    let mut amps = amplitudes.to_vec();
    amps.sort_by(|a, b| a.partial_cmp(b).expect("finite amplitude"));
    if amps.len() < 2 || (amps[amps.len() - 1] / amps[0]).log10() < T::one() - lit(1e-9) {
        return Err(invalid("amplitudes must span at least one decade"));
    }
    let q = predict(template)?.exponent;
    let mut rows = Vec::with_capacity(amps.len());
    let mut curves: Vec<Vec<(T, T)>> = Vec::with_capacity(amps.len());
    for &a in &amps {
        let spec = ProblemSpec {
            w: template.w.scaled(a)?,
            ..template.clone()
        };
        let pts = lambda_curve(&spec, alphas, config, options)?;
        let pairs = curve_pairs(&pts);
        if pairs.len() != alphas.len() || pairs.iter().any(|s| !(s.1 < T::zero())) {
            return Err(Error::RegimeViolation(format!(
                "sweep at amplitude {a} did not produce a negative curve"
            )));
        }
        // log c = mean(log(-λ) - q log α)
        let n = T::from_usize_lossy(pairs.len());
        let logc = pairs
            .iter()
            .fold(T::zero(), |acc, &(al, l)| acc + (-l).ln() - q * al.ln())
            / n;
        rows.push((a, logc.exp()));
        curves.push(pairs);
    }
    let x: Vec<T> = rows.iter().map(|r| r.0.ln()).collect();
    let y: Vec<T> = rows.iter().map(|r| r.1.ln()).collect();
    let slope = linear_fit(&x, &y).1;
    let nested = curves.windows(2).all(|w| {
        w[0].iter()
            .zip(&w[1])
            .all(|(small, large)| large.1 <= small.1)
    });
    Ok(WScaling {
        rows,
        slope,
        predicted_slope: q,
        nested,
    })
}
