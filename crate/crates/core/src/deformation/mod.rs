//! Energy-functional calculus along sampled curves and the second-variation
//! rigidity test for linear conformal deformations of Liouville metrics.

mod energy;
mod geodesics;
mod path;
mod rigidity;
mod xray;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::metric::MetricError;
use crate::quadrature::QuadratureError;

pub use energy::{energy, first_variation_energy, perturbation_energy, second_variation_energy};
pub use geodesics::{
    first_order, geodesic_continuation, geodesic_loop, sampled_geodesic, torus_geodesic, FirstOrder, PathOptions,
};
pub use path::{ParamPath, VariationField, DEFAULT_INTERVALS};
pub use rigidity::{rigidity_test, BasePointReport, RigidityOptions, RigidityReport, RigidityStage, Verdict};
pub use xray::{first_variation_length, torus_base_points, xray, FirstVariation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("sampled geodesic misses its end point by {residual:.3e}")]
    NotClosed { residual: f64 },
    #[error("{0}")]
    InvalidInput(String),
}
