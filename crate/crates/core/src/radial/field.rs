use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::radial::grid::RadialGrid;
use crate::scalar::Scalar;

/// Nodal samples of a radial function on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid<T>>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<RadialGrid<T>>, c: T) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid != other.grid {
            return Err(invalid("fields live on different grids"));
        }
        Ok(Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > T::zero())
    }

    /// Positive everywhere except possibly the last (Dirichlet) node.
    pub fn is_positive_interior(&self) -> bool {
        self.values[..self.values.len() - 1]
            .iter()
            .all(|&v| v > T::zero())
    }

    pub fn at(&self, r: T) -> T {
        self.grid.interpolate(&self.values, r)
    }

    /// Resamples onto another grid by linear interpolation (zero outside this grid).
    pub fn resample(&self, grid: Arc<RadialGrid<T>>) -> Self {
        let values = grid.nodes().iter().map(|&r| self.at(r)).collect();
        Self { grid, values }
    }
}

/// Quadrature of `f` over the ball `B_{R_max}` in `R^N`.
pub fn integrate<T: Scalar>(f: &RadialField<T>) -> T {
    f.grid
        .weights()
        .iter()
        .zip(&f.values)
        .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grid::{make_grid, Grading};
    use std::f64::consts::PI;

    fn grid(dim: usize, r: f64, m: usize) -> Arc<RadialGrid<f64>> {
        Arc::new(make_grid(dim, r, m, Grading::Uniform).unwrap())
    }

    #[test]
    fn constant_integrates_to_ball_volume() {
        let g = grid(3, 1.0, 1000);
        let one = RadialField::constant(g, 1.0);
        assert!((integrate(&one) / (4.0 * PI / 3.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_square_in_three_dimensions() {
        let r_max = 2.0;
        let g = grid(3, r_max, 1000);
        let f = RadialField::from_fn(g, |r| if r > 0.0 { r.powi(-2) } else { 0.0 });
        let exact = 4.0 * PI * r_max;
        assert!((integrate(&f) / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn linear_functions_are_exact() {
        // hat-function weights integrate piecewise-linear data exactly
        let g = grid(4, 3.0, 64);
        let f = RadialField::from_fn(g, |r| 2.0 - 0.5 * r);
        let area = 2.0 * PI * PI;
        let exact = area * (2.0 * 3.0_f64.powi(4) / 4.0 - 0.5 * 3.0_f64.powi(5) / 5.0);
        assert!((integrate(&f) / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratics_converge_at_second_order() {
        let exact = 4.0 * PI * (1.0 / 5.0);
        let err = |m| {
            let f = RadialField::from_fn(grid(3, 1.0, m), |r| r * r);
            (integrate(&f) - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = grid(3, 1.0, 20);
        assert!(RadialField::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn resample_reproduces_linear_data() {
        let a = grid(3, 4.0, 40);
        let b = Arc::new(make_grid(3, 4.0, 77, Grading::Geometric(1.02)).unwrap());
        let f = RadialField::from_fn(a, |r| 1.0 + 3.0 * r);
        let g = f.resample(b);
        for (&r, &v) in g.grid().nodes().iter().zip(g.values()) {
            assert!((v - (1.0 + 3.0 * r)).abs() < 1e-12);
        }
    }
}
