use std::fmt;

use liouville_core::deformation::DeformationError;
use liouville_core::dynamics::DynamicsError;
use liouville_core::lengths::LengthError;
use liouville_core::metric::MetricError;
use liouville_core::quadrature::QuadratureError;
use liouville_spectral::SpectralError;

/// Failure of a job, classified by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum JobError {
    /// Bad input or a failed check. Exit 2.
    Validation(String),
    /// A solver or iteration did not converge. Exit 3.
    Numerical(String),
    /// Reading or writing files. Exit 1.
    Io(String),
}

impl JobError {
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Validation(_) => 2,
            JobError::Numerical(_) => 3,
            JobError::Io(_) => 1,
        }
    }

    pub fn validation(m: impl Into<String>) -> Self {
        JobError::Validation(m.into())
    }
}

impl fmt::Display for JobError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JobError::Validation(m) => write!(f, "validation failure: {m}"),
            JobError::Numerical(m) => write!(f, "numerical failure: {m}"),
            JobError::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl std::error::Error for JobError {}

impl From<std::io::Error> for JobError {
    fn from(e: std::io::Error) -> Self {
        JobError::Io(e.to_string())
    }
}

impl From<csv::Error> for JobError {
    fn from(e: csv::Error) -> Self {
        JobError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for JobError {
    fn from(e: serde_json::Error) -> Self {
        JobError::Io(e.to_string())
    }
}

impl From<MetricError> for JobError {
    fn from(e: MetricError) -> Self {
        JobError::Validation(e.to_string())
    }
}

impl From<QuadratureError> for JobError {
    fn from(e: QuadratureError) -> Self {
        JobError::Numerical(e.to_string())
    }
}

impl From<DynamicsError> for JobError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Quadrature(q) => q.into(),
            DynamicsError::Metric(m) => m.into(),
            DynamicsError::NoTorus { .. } | DynamicsError::ZeroMomentum | DynamicsError::InvalidInput(_) => {
                JobError::Validation(e.to_string())
            }
            DynamicsError::StepTooLarge { .. }
            | DynamicsError::TurningPointHit { .. }
            | DynamicsError::NoConvergence { .. } => JobError::Numerical(e.to_string()),
        }
    }
}

impl From<LengthError> for JobError {
    fn from(e: LengthError) -> Self {
        match e {
            LengthError::Dynamics(d) => d.into(),
            LengthError::Quadrature(q) => q.into(),
            LengthError::Metric(m) => m.into(),
            _ => JobError::Validation(e.to_string()),
        }
    }
}

impl From<DeformationError> for JobError {
    fn from(e: DeformationError) -> Self {
        match e {
            DeformationError::Dynamics(d) => d.into(),
            DeformationError::Quadrature(q) => q.into(),
            DeformationError::Metric(m) => m.into(),
            DeformationError::NotClosed { .. } => JobError::Numerical(e.to_string()),
            DeformationError::InvalidInput(_) => JobError::Validation(e.to_string()),
        }
    }
}

impl From<SpectralError> for JobError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NoConvergence { .. } | SpectralError::Solver(_) => JobError::Numerical(e.to_string()),
            _ => JobError::Validation(e.to_string()),
        }
    }
}
