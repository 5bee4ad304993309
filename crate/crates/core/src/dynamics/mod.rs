//! Geodesic flow, separated trajectories, rational tori and loop functions.

mod flow;
pub mod integrator;
mod loops;
mod maupertuis;
mod torus;

use thiserror::Error;

use crate::metric::MetricError;
use crate::quadrature::QuadratureError;

pub use flow::{flow, flow_to, FlowOptions, FlowOutput, GeodesicState, PathSample};
pub use integrator::Method;
pub use loops::{continuation_radius, loop_function, shoot_loop, LoopOptions, LoopSolution};
pub use maupertuis::{maupertuis_trajectory, MaupertuisOptions, MaupertuisPath, MaupertuisSample};
pub use torus::{
    closure_error, find_rational_torus, matching_function, rotational_range, twist_rank, CircleIntegrals,
    RationalTorus, TwistReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step too large: relative energy drift {drift:.3e} exceeds {tolerance:.3e}")]
    StepTooLarge { drift: f64, tolerance: f64 },
    #[error("turning point of axis {axis} reached at x = {at:.6}")]
    TurningPointHit { axis: usize, at: f64 },
    #[error("initial momentum vanishes")]
    ZeroMomentum,
    #[error("no convergence after {iterations} Newton steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("class ({m}, {n}) has no rational torus")]
    NoTorus { m: i64, n: i64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
