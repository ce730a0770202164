//! Comparison profiles, test-function upper bounds, weighted capacity and `Γ(0, x)`.

mod capacity;
mod gamma;
mod supersolution;
mod upper;

pub use capacity::{capacity_value, CapacityMode, CapacityProblem};
pub use gamma::{
    euler_gamma, incomplete_gamma_zero, incomplete_gamma_zero_cf, incomplete_gamma_zero_series,
};
pub use supersolution::{
    comparison_ratio, constants_a_b, geometric_samples, smallest_beta, supersolution_residual,
    supersolution_suite, validity_threshold, Family, FamilyCheck, ResidualSample, Supersolution,
};
pub use upper::{
    ground_state_mass, omega, optimize_upper_bound, upper_bound_lambda, upper_bound_terms,
    OptimizedBound, TestFunction, UpperBoundTerms, T_RANGE,
};

use serde::{Deserialize, Serialize};

use crate::energy::Regime;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Predicted growth of `‖φ_α‖_p^p` (normalized by `φ_α(0) = 1`) as `λ → 0⁻`, up to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MassGrowth<T> {
    /// `(-λ)^{exponent}` with `exponent = ν₀ - N/p`.
    Power { exponent: T, factor: T },
    /// `|log(-λ)|`, the borderline case `N = p²`.
    Logarithmic { factor: T },
}

impl<T: Scalar> MassGrowth<T> {
    pub fn factor(&self) -> T {
        match *self {
            MassGrowth::Power { factor, .. } | MassGrowth::Logarithmic { factor } => factor,
        }
    }
}

pub fn lower_bound_mass<T: Scalar>(lambda: T, p: T, dim: usize) -> Result<MassGrowth<T>> {
    if !(lambda < T::zero()) {
        return Err(Error::Domain(format!("needs lambda < 0, got {lambda}")));
    }
    let n = T::from_usize_lossy(dim);
    match Regime::classify(p, dim) {
        Regime::Superlinear => {
            let exponent = (n - p) / (p - T::one()) - n / p;
            Ok(MassGrowth::Power {
                exponent,
                factor: (-lambda).powf(exponent),
            })
        }
        Regime::LogCorrected => Ok(MassGrowth::Logarithmic {
            factor: (-lambda).ln().abs(),
        }),
        r => Err(Error::UnsupportedRegime(format!(
            "mass growth law stated only for p < N <= p^2, got {r}"
        ))),
    }
}
