use crate::radial::field::RadialField;
use crate::scalar::Scalar;

/// `|u'(r)|`-ready derivative of a radial field.
///
/// Second-order three-point differences on the (possibly non-uniform) interior, second-order
/// one-sided at `R_max`, and exactly zero at the origin (even extension of a radial function).
pub fn radial_gradient<T: Scalar>(f: &RadialField<T>) -> RadialField<T> {
    let r = f.grid().nodes();
    let u = f.values();
    let n = u.len();
    let mut d = vec![T::zero(); n];
    for i in 1..n - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        d[i] = (hm * hm * u[i + 1] - hp * hp * u[i - 1] - (hm * hm - hp * hp) * u[i])
            / (hm * hp * (hm + hp));
    }
    // one-sided quadratic through the last three nodes
    let (h1, h2) = (r[n - 1] - r[n - 2], r[n - 2] - r[n - 3]);
    let s = h1 + h2;
    d[n - 1] = u[n - 1] * (T::one() / h1 + T::one() / s) - u[n - 2] * (s / (h1 * h2))
        + u[n - 3] * (h1 / (h2 * s));
    RadialField::new(std::sync::Arc::clone(f.grid()), d).expect("same grid")
}
