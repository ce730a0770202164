use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Below this gradient magnitude the singular factor `|f'|^{p-2}` (p < 2) is regularized.
pub const GRAD_EPS: f64 = 1e-14;

/// A radial profile known in closed form together with its first two derivatives.
pub trait RadialFunction<T: Scalar> {
    fn value(&self, r: T) -> T;
    fn d1(&self, r: T) -> T;
    fn d2(&self, r: T) -> T;

    /// True when the profile blows up at `r = 0` (power laws, supersolutions).
    fn singular_at_origin(&self) -> bool {
        false
    }
}

impl<T: Scalar, F: RadialFunction<T> + ?Sized> RadialFunction<T> for &F {
    fn value(&self, r: T) -> T {
        (**self).value(r)
    }
    fn d1(&self, r: T) -> T {
        (**self).d1(r)
    }
    fn d2(&self, r: T) -> T {
        (**self).d2(r)
    }
    fn singular_at_origin(&self) -> bool {
        (**self).singular_at_origin()
    }
}

/// Closure-backed [`RadialFunction`].
pub struct ClosureRadial<V, D1, D2> {
    pub value: V,
    pub d1: D1,
    pub d2: D2,
    pub singular: bool,
}

impl<T, V, D1, D2> RadialFunction<T> for ClosureRadial<V, D1, D2>
where
    T: Scalar,
    V: Fn(T) -> T,
    D1: Fn(T) -> T,
    D2: Fn(T) -> T,
{
    fn value(&self, r: T) -> T {
        (self.value)(r)
    }
    fn d1(&self, r: T) -> T {
        (self.d1)(r)
    }
    fn d2(&self, r: T) -> T {
        (self.d2)(r)
    }
    fn singular_at_origin(&self) -> bool {
        self.singular
    }
}

/// `coef * r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw<T> {
    pub coef: T,
    pub exponent: T,
}

impl<T: Scalar> RadialFunction<T> for PowerLaw<T> {
    fn value(&self, r: T) -> T {
        self.coef * r.powf(self.exponent)
    }
    fn d1(&self, r: T) -> T {
        self.coef * self.exponent * r.powf(self.exponent - T::one())
    }
    fn d2(&self, r: T) -> T {
        let s = self.exponent;
        self.coef * s * (s - T::one()) * r.powf(s - lit(2.0))
    }
    fn singular_at_origin(&self) -> bool {
        self.exponent < T::zero()
    }
}

/// `|g|^{p-2}` with the singular case regularized.
#[inline]
pub(crate) fn grad_factor<T: Scalar>(g: T, p: T) -> T {
    let two = lit::<T>(2.0);
    if p == two {
        return T::one();
    }
    let a = g.abs();
    if p < two && a < lit(GRAD_EPS) {
        (a + lit(GRAD_EPS)).powf(p - two)
    } else if a == T::zero() {
        T::zero()
    } else {
        a.powf(p - two)
    }
}

/// Radial p-Laplacian with the sign convention of the energy:
/// `-Δ_p f = -r^{1-N} (r^{N-1} |f'|^{p-2} f')' = -|f'|^{p-2} [(p-1) f'' + (N-1) f'/r]`.
///
/// At `r = 0` a regular radial profile (with `f'(0) = 0`) uses the limit `(N-1) f'/r -> (N-1) f''(0)`.
pub fn radial_p_laplacian<T: Scalar, F: RadialFunction<T>>(
    f: &F,
    p: T,
    dim: usize,
    r: T,
) -> Result<T> {
    if r < T::zero() {
        return Err(Error::Domain(format!("negative radius {r}")));
    }
    let n1 = T::from_usize_lossy(dim - 1);
    let d1 = f.d1(r);
    let d2 = f.d2(r);
    if r == T::zero() {
        if f.singular_at_origin() {
            return Err(Error::Domain(
                "singular profile evaluated at the origin".into(),
            ));
        }
        let bracket = (p - T::one() + n1) * d2;
        return Ok(-grad_factor(d1, p) * bracket);
    }
    let bracket = (p - T::one()) * d2 + n1 * d1 / r;
    Ok(-grad_factor(d1, p) * bracket)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_solution_is_p_harmonic() {
        for &(p, n) in &[(2.0, 3usize), (1.5, 3), (3.0, 5), (2.5, 4)] {
            let nu = (n as f64 - p) / (p - 1.0);
            let f = PowerLaw { coef: 1.0, exponent: -nu };
            for &r in &[0.1, 1.0, 7.5, 120.0] {
                let v = radial_p_laplacian(&f, p, n, r).unwrap();
                let scale = f.d1(r).abs().powf(p - 1.0) / r;
                assert!(v.abs() <= 1e-12 * scale, "p={p} n={n} r={r} v={v}");
            }
        }
    }

    #[test]
    fn square_profile_p3_n4() {
        // -Δ_p r^2 = -2^{p-1} (N+p-2) r^{p-2}
        let f = PowerLaw { coef: 1.0f64, exponent: 2.0 };
        let v = radial_p_laplacian(&f, 3.0, 4, 1.0).unwrap();
        assert!((v + 20.0).abs() < 1e-12);
        let v2 = radial_p_laplacian(&f, 3.0, 4, 2.0).unwrap();
        assert!((v2 + 40.0).abs() < 1e-11);
    }

    #[test]
    fn p2_matches_classical_laplacian() {
        let f = ClosureRadial {
            value: |r: f64| (-r * r).exp(),
            d1: |r: f64| -2.0 * r * (-r * r).exp(),
            d2: |r: f64| (4.0 * r * r - 2.0) * (-r * r).exp(),
            singular: false,
        };
        for &r in &[0.0, 0.3, 1.0, 2.0] {
            let v = radial_p_laplacian(&f, 2.0, 3, r).unwrap();
            let classical = if r == 0.0 {
                -3.0 * f.d2(0.0)
            } else {
                -(f.d2(r) + 2.0 * f.d1(r) / r)
            };
            assert!((v - classical).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_profile_at_origin_is_domain_error() {
        let f = PowerLaw { coef: 1.0, exponent: -1.0 };
        assert!(matches!(
            radial_p_laplacian(&f, 2.0, 3, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn degenerate_gradient_regularized_for_small_p() {
        let f = PowerLaw { coef: 1.0f64, exponent: 2.0 };
        let v = radial_p_laplacian(&f, 1.5, 3, 0.0).unwrap();
        assert!(v.is_finite());
    }
}
