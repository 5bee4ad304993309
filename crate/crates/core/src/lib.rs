//! Liouville metrics `(1 + f1(x1) + f2(x2))(dx1² + dx2²)` on the unit-square
//! torus and their conformal perturbations: densities, geodesic flow,
//! rational tori and loop functions, closed-form length spectra, and the
//! energy-functional calculus used to test isospectral rigidity.
//!
//! The geometry is generic over [`Real`] (`f32`, `f64`); `f64` aliases are
//! provided for the common case.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deformation;
pub mod dynamics;
pub mod lengths;
pub mod metric;
pub mod quadrature;
pub mod roots;
mod scalar;

pub use scalar::Real;

pub type PeriodicFunctionF64 = metric::PeriodicFunction<f64>;
pub type BivariateFunctionF64 = metric::BivariateFunction<f64>;
pub type LiouvilleMetricF64 = metric::LiouvilleMetric<f64>;
pub type ConformalMetricF64 = metric::ConformalMetric<f64>;
