//! `Γ(0, x) = E₁(x) = ∫_x^∞ e^{-s}/s ds`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `-γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!)`.
pub fn incomplete_gamma_zero_series<T: Scalar>(x: T) -> T {
    let mut sum = T::zero();
    let mut term = T::one();
    for k in 1..400 {
        let kf = T::from_usize_lossy(k);
        term = term * x / kf;
        let add = term / kf;
        sum = if k % 2 == 1 { sum + add } else { sum - add };
        if add.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    -lit::<T>(EULER_GAMMA) - x.ln() + sum
}

/// Continued fraction `e^{-x} / (x + 1 - 1²/(x + 3 - 2²/(x + 5 - ...)))`, modified Lentz.
pub fn incomplete_gamma_zero_cf<T: Scalar>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let two = lit::<T>(2.0);
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..1000 {
        let fi = T::from_usize_lossy(i);
        let an = -fi * fi;
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = c * d;
        h = h * del;
        if (del - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    h * (-x).exp()
}

/// `Γ(0, x)` for `x > 0`: series below 1, continued fraction from 1 on.
pub fn incomplete_gamma_zero<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::Domain(format!("Gamma(0, x) needs x > 0, got {x}")));
    }
    Ok(if x < T::one() {
        incomplete_gamma_zero_series(x)
    } else {
        incomplete_gamma_zero_cf(x)
    })
}

/// Euler–Mascheroni constant.
pub fn euler_gamma<T: Scalar>() -> T {
    lit(EULER_GAMMA)
}
