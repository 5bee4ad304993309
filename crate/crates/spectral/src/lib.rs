//! Laplace spectra of conformal metrics `ρ(dx1² + dx2²)` on the unit-square
//! torus by a Fourier–Galerkin method, with the Weyl count, heat trace,
//! smoothed wave trace and regularized resolvent built on them.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod laplace;
pub mod resolvent;
pub mod spectrum;
pub mod wave;

use thiserror::Error;

pub use laplace::{eigenvalues, LaplaceOptions, LaplaceProblem};
pub use resolvent::{resolvent_probe, ResolventOptions, ResolventProbe};
pub use spectrum::{heat_trace, lattice_spectrum, weyl_count, HeatTrace, LaplaceSpectrum, WeylCount};
pub use wave::{detect_peaks, poisson_check, poisson_report, wave_trace, PoissonReport, WaveTrace, WaveTraceOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid {0} must be even and at least 32")]
    InvalidGrid(usize),
    #[error("density needs bandwidth {bandwidth:?} but the grid allows {limit}")]
    ResolutionTooLow { bandwidth: Option<usize>, limit: usize },
    #[error("{count} eigenvalues requested, grid holds at most {limit} reliably")]
    TooManyEigenvalues { count: usize, limit: usize },
    #[error("eigenpair {index} has residual {residual:.3e}")]
    NoConvergence { index: usize, residual: f64 },
    #[error("eigensolver failed: {0}")]
    Solver(String),
    #[error("heat trace tail {tail:.3e} too large against {value:.6e} at t = {t}")]
    TailTooLarge { t: f64, tail: f64, value: f64 },
    #[error("σ = {sigma} is finer than the eigenvalues resolve (needs ≥ {minimum:.4e})")]
    ResolutionDishonest { sigma: f64, minimum: f64 },
    #[error("peak at t = {time:.6} matches no length")]
    UnmatchedPeak { time: f64 },
    #[error("minimal length {length:.10} has no peak")]
    MissingMinimalLength { length: f64 },
    #[error("{shells} λ shells in the band, need {required}")]
    BandTooShort { shells: usize, required: usize },
    #[error("band end {band_end} plus reach {reach} exceeds the largest frequency {top}")]
    BandOutsideSpectrum { band_end: f64, reach: f64, top: f64 },
    #[error("length {length} is within 4s of L = {center} (s = {width}) but outside the window")]
    WindowNotClear { length: f64, center: f64, width: f64 },
    #[error("{0}")]
    InvalidInput(String),
}
