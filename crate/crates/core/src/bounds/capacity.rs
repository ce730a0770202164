//! Weighted capacity of the annulus `1 < ρ < R`:
//! `min ∫₁^R |u'|^p ρ^{d-1} dρ` over `u(1) = 1`, `u(R) = 0`, with `d = (p²-N)/(p-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityProblem<T> {
    pub p: T,
    pub dim: usize,
    pub outer_radius: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapacityMode {
    ClosedForm,
    /// Exact minimum over piecewise-linear functions on `cells` log-uniform cells.
    DiscreteMin { cells: usize },
}

impl<T: Scalar> CapacityProblem<T> {
    pub fn new(p: T, dim: usize, outer_radius: T) -> Result<Self> {
        if !(outer_radius > T::one()) {
            return Err(invalid(format!("outer radius must exceed 1, got {outer_radius}")));
        }
        if !(p > T::one()) || T::from_usize_lossy(dim) <= p {
            return Err(invalid("capacity problem needs 1 < p < N"));
        }
        Ok(Self { p, dim, outer_radius })
    }

    /// `d = (p² - N)/(p - 1)`.
    pub fn weight_exponent(&self) -> T {
        (self.p * self.p - T::from_usize_lossy(self.dim)) / (self.p - T::one())
    }

    /// `ν = (N - p)/(p - 1)²`.
    pub fn nu(&self) -> T {
        let pm1 = self.p - T::one();
        (T::from_usize_lossy(self.dim) - self.p) / (pm1 * pm1)
    }

    /// `u₀(ρ) = (R^ν - ρ^ν)/(R^ν - 1)`.
    pub fn minimizer(&self, rho: T) -> T {
        let nu = self.nu();
        let rn = self.outer_radius.powf(nu);
        (rn - rho.powf(nu)) / (rn - T::one())
    }

    /// `∫_a^b ρ^{d-1} dρ`.
    fn cell_weight(&self, a: T, b: T) -> T {
        let d = self.weight_exponent();
        if d.abs() < T::epsilon() {
            (b / a).ln()
        } else {
            (b.powf(d) - a.powf(d)) / d
        }
    }
}

pub fn capacity_value<T: Scalar>(cp: &CapacityProblem<T>, mode: CapacityMode) -> Result<T> {
    let p = cp.p;
    match mode {
        CapacityMode::ClosedForm => {
            // |u₀'| = ν ρ^{ν-1}/(R^ν-1) and (ν-1)p + d - 1 = ν - 1, so the integral collapses.
            let nu = cp.nu();
            Ok(nu.powf(p - T::one()) * (cp.outer_radius.powf(nu) - T::one()).powf(T::one() - p))
        }
        CapacityMode::DiscreteMin { cells } => {
            if cells < 2 {
                return Err(invalid("need at least two cells"));
            }
            // Euler-Lagrange: w_j |s_j|^{p-2} s_j = F h_j, so |s_j| ∝ (h_j/w_j)^{1/(p-1)}
            let e = T::one() / (p - T::one());
            let log_r = cp.outer_radius.ln();
            let nodes: Vec<T> = (0..=cells)
                .map(|j| (log_r * T::from_usize_lossy(j) / T::from_usize_lossy(cells)).exp())
                .collect();
            let mut hw = Vec::with_capacity(cells);
            let mut drop = T::zero();
            for j in 0..cells {
                let h = nodes[j + 1] - nodes[j];
                let w = cp.cell_weight(nodes[j], nodes[j + 1]);
                let g = (h / w).powf(e);
                drop = drop + g * h;
                hw.push((g, w));
            }
            // slopes s_j = -g_j / drop make the total drop exactly 1
            Ok(hw
                .iter()
                .fold(T::zero(), |acc, &(g, w)| acc + w * (g / drop).powf(p)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FINE: CapacityMode = CapacityMode::DiscreteMin { cells: 4000 };

    #[test]
    fn examples_p2() {
        let a = CapacityProblem::new(2.0f64, 3, 2.0).unwrap();
        assert!((capacity_value(&a, CapacityMode::ClosedForm).unwrap() - 1.0).abs() < 1e-12);
        assert!((capacity_value(&a, FINE).unwrap() - 1.0).abs() < 1e-4);
        let b = CapacityProblem::new(2.0f64, 5, 2.0).unwrap();
        assert!((capacity_value(&b, CapacityMode::ClosedForm).unwrap() - 3.0 / 7.0).abs() < 1e-12);
        assert!((capacity_value(&b, FINE).unwrap() - 3.0 / 7.0).abs() < 1e-4);
    }

    #[test]
    fn minimizer_boundary_values() {
        let cp = CapacityProblem::new(3.0f64, 7, 4.0).unwrap();
        assert!((cp.minimizer(1.0) - 1.0).abs() < 1e-15);
        assert!(cp.minimizer(4.0).abs() < 1e-15);
        assert_eq!(cp.weight_exponent(), 1.0);
        assert_eq!(cp.nu(), 1.0);
    }

    #[test]
    fn discrete_value_is_above_closed_form() {
        // piecewise-linear trial space is a subset of the admissible class
        for &(p, n) in &[(2.0f64, 3usize), (2.0, 5), (3.0, 7)] {
            let cp = CapacityProblem::new(p, n, 8.0).unwrap();
            let exact = capacity_value(&cp, CapacityMode::ClosedForm).unwrap();
            let coarse = capacity_value(&cp, CapacityMode::DiscreteMin { cells: 50 }).unwrap();
            assert!(coarse >= exact * (1.0 - 1e-12));
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(CapacityProblem::new(2.0f64, 3, 1.0).is_err());
        assert!(CapacityProblem::new(3.0f64, 3, 2.0).is_err());
    }
}
