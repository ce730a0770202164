//! Principal eigenvalue of weakly coupled critical p-Laplace operators
//! `-Δ_p + V - αW` restricted to radial functions.
//!
//! Numerical types are generic over [`Scalar`] (implemented for `f32` and `f64`);
//! the aliases at the crate root fix `f64`.

// `!(x > 0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bounds;
pub mod eigensolver;
pub mod energy;
pub mod error;
pub mod potentials;
pub mod radial;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = radial::RadialGrid<f64>;
pub type Field = radial::RadialField<f64>;
pub type Profile = potentials::GroundStateProfile<f64>;
pub type Pot = potentials::Potential<f64>;
