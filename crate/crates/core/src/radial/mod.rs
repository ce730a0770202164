//! Radial grids, N-dimensional quadrature, discrete derivatives and the radial p-Laplacian.

mod derivative;
mod field;
mod grid;
mod plap;

pub use derivative::radial_gradient;
pub use field::{integrate, RadialField};
pub use grid::{ball_volume, make_grid, sphere_area, Grading, GridPlan, RadialGrid};
pub use plap::{radial_p_laplacian, ClosureRadial, PowerLaw, RadialFunction, GRAD_EPS};
pub(crate) use grid::gauss_legendre;
