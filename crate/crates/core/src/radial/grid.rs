use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{lit, Scalar};

/// Node distribution of a [`RadialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading<T> {
    Uniform,
    /// Consecutive interval lengths grow by the given ratio, concentrating nodes near the origin.
    Geometric(T),
}

/// Recipe that turns a truncation radius into a grid, keeping the near-origin resolution fixed
/// while the radius grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridPlan<T> {
    Uniform { spacing: T },
    Geometric { min_spacing: T, ratio: T },
}

impl<T: Scalar> GridPlan<T> {
    pub fn intervals_for(&self, r_max: T) -> usize {
        let n = match *self {
            GridPlan::Uniform { spacing } => (r_max / spacing).ceil().to_f64_lossy(),
            GridPlan::Geometric { min_spacing, ratio } => {
                let q = ratio.to_f64_lossy();
                let x = 1.0 + r_max.to_f64_lossy() * (q - 1.0) / min_spacing.to_f64_lossy();
                (x.ln() / q.ln()).ceil()
            }
        };
        (n.max(16.0)) as usize
    }

    pub fn build(&self, dim: usize, r_max: T) -> Result<RadialGrid<T>> {
        let m = self.intervals_for(r_max);
        let grading = match *self {
            GridPlan::Uniform { .. } => Grading::Uniform,
            GridPlan::Geometric { ratio, .. } => Grading::Geometric(ratio),
        };
        make_grid(dim, r_max, m, grading)
    }
}

/// Radial nodes `0 = r_0 < r_1 < ... < r_M = R_max` carrying the N-dimensional volume measure.
///
/// `weights[i]` is the exact integral of the i-th piecewise-linear hat function against
/// `|S^{N-1}| r^{N-1} dr`; `cell_weights[j]` is the volume of the shell `[r_j, r_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    dim: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    cell_weights: Vec<T>,
}

// 8-point Gauss-Legendre rule on [-1, 1]; exact for r^{N-1} times a linear hat when N <= 14.
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss-Legendre approximation of `∫_a^b g`.
pub(crate) fn gauss_legendre<T: Scalar>(a: T, b: T, g: impl Fn(T) -> T) -> T {
    let half = lit::<T>(0.5);
    let (mid, rad) = ((a + b) * half, (b - a) * half);
    let mut acc = T::zero();
    for k in 0..4 {
        let x = lit::<T>(GL_X[k]) * rad;
        acc = acc + lit::<T>(GL_W[k]) * (g(mid - x) + g(mid + x));
    }
    acc * rad
}

/// Integrals of `(b-r)/h * g(r)` and `(r-a)/h * g(r)` over `[a, b]`.
fn hat_integrals<T: Scalar>(a: T, b: T, g: impl Fn(T) -> T) -> (T, T) {
    let h = b - a;
    let half = lit::<T>(0.5);
    let (mut left, mut right) = (T::zero(), T::zero());
    for k in 0..4 {
        for sign in [-1.0, 1.0] {
            let x = lit::<T>(sign * GL_X[k]);
            let t = half * (x + T::one());
            let r = a + h * t;
            let wgt = lit::<T>(GL_W[k]) * half * h * g(r);
            left = left + (T::one() - t) * wgt;
            right = right + t * wgt;
        }
    }
    (left, right)
}

/// Area of the unit sphere `S^{N-1}` in `R^N`, `2 pi^{N/2} / Gamma(N/2)`.
pub fn sphere_area<T: Scalar>(dim: usize) -> T {
    // Gamma(N/2) by the half-integer recursion.
    let mut gamma = if dim % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    lit(2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma)
}

/// Volume of the N-ball of the given radius.
pub fn ball_volume<T: Scalar>(dim: usize, radius: T) -> T {
    sphere_area::<T>(dim) * radius.powi(dim as i32) / T::from_usize_lossy(dim)
}

/// Builds a grid with `intervals` cells (`intervals + 1` nodes) on `[0, r_max]`.
pub fn make_grid<T: Scalar>(
    dim: usize,
    r_max: T,
    intervals: usize,
    grading: Grading<T>,
) -> Result<RadialGrid<T>> {
    if dim < 1 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(r_max > T::zero()) || !r_max.is_finite() {
        return Err(invalid(format!("R_max must be positive, got {r_max}")));
    }
    if intervals < 16 {
        return Err(invalid(format!("need at least 16 intervals, got {intervals}")));
    }
    let m = intervals;
    let mut nodes = Vec::with_capacity(m + 1);
    match grading {
        Grading::Uniform => {
            let h = r_max / T::from_usize_lossy(m);
            for i in 0..=m {
                nodes.push(h * T::from_usize_lossy(i));
            }
        }
        Grading::Geometric(q) => {
            if !(q > T::one() && q <= lit(1.2)) {
                return Err(invalid(format!("geometric ratio must lie in (1, 1.2], got {q}")));
            }
            let qm = q.powi(m as i32);
            if !qm.is_finite() {
                return Err(invalid("geometric grading overflows; reduce the node count"));
            }
            let h0 = r_max * (q - T::one()) / (qm - T::one());
            let mut r = T::zero();
            let mut h = h0;
            nodes.push(r);
            for _ in 0..m {
                r = r + h;
                nodes.push(r);
                h = h * q;
            }
            nodes[m] = r_max;
        }
    }
    RadialGrid::from_nodes(dim, nodes)
}

impl<T: Scalar> RadialGrid<T> {
    /// Grid on arbitrary strictly increasing nodes starting at 0.
    pub fn from_nodes(dim: usize, nodes: Vec<T>) -> Result<Self> {
        if dim < 1 {
            return Err(invalid("dimension must be at least 1"));
        }
        if nodes.len() < 4 {
            return Err(invalid("grid needs at least 4 nodes"));
        }
        if nodes[0] != T::zero() {
            return Err(invalid("first node must be the origin"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("nodes must be strictly increasing"));
        }
        let area = sphere_area::<T>(dim);
        let n_minus_1 = (dim - 1) as i32;
        let measure = |r: T| r.powi(n_minus_1);
        let mut weights = vec![T::zero(); nodes.len()];
        let mut cell_weights = Vec::with_capacity(nodes.len() - 1);
        for j in 0..nodes.len() - 1 {
            let (a, b) = (nodes[j], nodes[j + 1]);
            let (left, right) = hat_integrals(a, b, measure);
            weights[j] = weights[j] + area * left;
            weights[j + 1] = weights[j + 1] + area * right;
            cell_weights.push(area * (left + right));
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            cell_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn cell_weights(&self) -> &[T] {
        &self.cell_weights
    }

    /// Number of nodes (`M + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of cells (`M`).
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn spacing(&self, cell: usize) -> T {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    /// Index of the last node with `r <= radius`.
    pub fn index_at_or_below(&self, radius: T) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&radius).expect("finite nodes"))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Piecewise-linear interpolation of nodal values at `r`; zero beyond `R_max`.
    pub fn interpolate(&self, values: &[T], r: T) -> T {
        if r >= self.r_max() {
            return if r == self.r_max() { values[values.len() - 1] } else { T::zero() };
        }
        if r <= T::zero() {
            return values[0];
        }
        let i = self.index_at_or_below(r);
        let t = (r - self.nodes[i]) / self.spacing(i);
        values[i] * (T::one() - t) + values[i + 1] * t
    }
}
