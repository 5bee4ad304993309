//! Separated trajectories of Liouville metrics.
//!
//! On the energy level split by `e`, geodesics of `(1 + f1 + f2)|dx|²` are
//! reparametrized solutions of the decoupled equations `x_i'' = f_i'(x_i)` with
//! `x1'² = 2(e + f1)` and `x2'² = 2(1 − e + f2)`. The Riemannian length grows
//! at rate `√2 (1 + f1 + f2)`. The second-order form passes through turning
//! points without special handling.

use crate::dynamics::integrator::{partition, step, Method};
use crate::dynamics::DynamicsError;
use crate::metric::LiouvilleMetric;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct MaupertuisOptions<T> {
    pub dt: T,
    pub method: Method,
    pub sample_every: usize,
    /// Allow velocity components to change sign (librating branches).
    pub allow_turning: bool,
}

impl<T: Real> Default for MaupertuisOptions<T> {
    fn default() -> Self {
        Self { dt: T::lit(1e-3), method: Method::Gauss6, sample_every: 0, allow_turning: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaupertuisSample<T> {
    pub tau: T,
    /// Lifted position.
    pub x: [T; 2],
    /// `dx/dτ`.
    pub v: [T; 2],
    /// Riemannian length travelled since `τ = 0`.
    pub length: T,
}

impl<T: Real> MaupertuisSample<T> {
    /// Momentum of the unit-speed geodesic through this point, `ξ = v / √2`.
    pub fn covector(&self) -> [T; 2] {
        let s = T::lit(0.5).sqrt();
        [self.v[0] * s, self.v[1] * s]
    }
}

#[derive(Clone, Debug)]
pub struct MaupertuisPath<T> {
    pub samples: Vec<MaupertuisSample<T>>,
}

impl<T: Real> MaupertuisPath<T> {
    pub fn end(&self) -> &MaupertuisSample<T> {
        self.samples.last().expect("path has at least its start")
    }
}

/// Separated trajectory from `x0` with velocity signs `signs` (each ±1) over
/// Maupertuis time `tau`.
pub fn maupertuis_trajectory<T: Real>(
    metric: &LiouvilleMetric<T>,
    e: T,
    x0: [T; 2],
    signs: [i8; 2],
    tau: T,
    opts: &MaupertuisOptions<T>,
) -> Result<MaupertuisPath<T>, DynamicsError> {
    if signs.iter().any(|s| s.abs() != 1) {
        return Err(DynamicsError::InvalidInput("velocity signs must be +1 or -1".into()));
    }
    let (f1, f2) = (metric.f1(), metric.f2());
    let g = [e + f1.eval(x0[0]), T::one() - e + f2.eval(x0[1])];
    for (i, gi) in g.iter().enumerate() {
        if *gi < T::zero() {
            return Err(DynamicsError::InvalidInput(format!(
                "start point is outside the allowed region of axis {}: {:.3e}",
                i + 1,
                gi.as_f64()
            )));
        }
        if *gi == T::zero() && !opts.allow_turning {
            return Err(DynamicsError::TurningPointHit { axis: i + 1, at: x0[i].as_f64() });
        }
    }
    let two = T::lit(2.0);
    let sqrt2 = two.sqrt();
    let v0 = [T::from_int(signs[0] as i64) * (two * g[0]).sqrt(), T::from_int(signs[1] as i64) * (two * g[1]).sqrt()];
    let field = |y: &[T; 5]| {
        let a = f1.jet(y[0]);
        let b = f2.jet(y[1]);
        [y[2], y[3], a[1], b[1], sqrt2 * (T::one() + a[0] + b[0])]
    };
    let (n, h) = partition(tau, opts.dt);
    let mut y = [x0[0], x0[1], v0[0], v0[1], T::zero()];
    let sample = |t: T, y: &[T; 5]| MaupertuisSample { tau: t, x: [y[0], y[1]], v: [y[2], y[3]], length: y[4] };
    let mut samples = vec![sample(T::zero(), &y)];
    for i in 0..n {
        let next = step(opts.method, &y, h, &field)
            .ok_or(DynamicsError::StepTooLarge { drift: f64::NAN, tolerance: f64::NAN })?;
        if !opts.allow_turning {
            for k in 0..2 {
                if (next[2 + k] > T::zero()) != (v0[k] > T::zero()) {
                    return Err(DynamicsError::TurningPointHit { axis: k + 1, at: next[k].as_f64() });
                }
            }
        }
        y = next;
        let last = i + 1 == n;
        if last || (opts.sample_every > 0 && (i + 1) % opts.sample_every == 0) {
            let t = if last { tau } else { h * T::from_count(i + 1) };
            samples.push(sample(t, &y));
        }
    }
    Ok(MaupertuisPath { samples })
}
