//! Hamiltonian geodesic flow for `H = |ξ|² / (2ρ)`.

use crate::dynamics::integrator::{partition, step, Method};
use crate::dynamics::DynamicsError;
use crate::metric::Density;
use crate::scalar::Real;

/// Point of the cotangent bundle of the torus with a lift to the plane.
///
/// `x` lies in `[0, 1)²`; the lifted position is `x + winding`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicState<T> {
    pub x: [T; 2],
    pub winding: [i64; 2],
    pub xi: [T; 2],
}

impl<T: Real> GeodesicState<T> {
    /// State at a lifted position.
    pub fn new(lifted: [T; 2], xi: [T; 2]) -> Self {
        let mut s = Self { x: lifted, winding: [0, 0], xi };
        s.normalize();
        s
    }

    /// Unit-speed state at `x` with momentum direction angle `theta`.
    pub fn unit<D: Density<T>>(metric: &D, x: [T; 2], theta: T) -> Self {
        let r = metric.rho(x).sqrt();
        let (s, c) = theta.sin_cos();
        Self::new(x, [r * c, r * s])
    }

    fn normalize(&mut self) {
        for i in 0..2 {
            let f = self.x[i].floor();
            if f != T::zero() {
                self.x[i] -= f;
                self.winding[i] += f.to_i64().expect("winding fits in i64");
            }
            if self.x[i] >= T::one() {
                self.x[i] -= T::one();
                self.winding[i] += 1;
            }
        }
    }

    pub fn lifted(&self) -> [T; 2] {
        [self.x[0] + T::from_int(self.winding[0]), self.x[1] + T::from_int(self.winding[1])]
    }

    pub fn hamiltonian<D: Density<T>>(&self, metric: &D) -> T {
        (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]) / (T::lit(2.0) * metric.rho(self.x))
    }

    /// `ẋ = ξ / ρ`.
    pub fn velocity<D: Density<T>>(&self, metric: &D) -> [T; 2] {
        let r = metric.rho(self.x);
        [self.xi[0] / r, self.xi[1] / r]
    }

    /// Riemannian speed `|ξ| / √ρ`; the flow time times this is the length.
    pub fn speed<D: Density<T>>(&self, metric: &D) -> T {
        ((self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]) / metric.rho(self.x)).sqrt()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions<T> {
    pub dt: T,
    pub method: Method,
    /// Record every `sample_every`-th step; `0` records only the endpoints.
    pub sample_every: usize,
    /// Relative energy drift allowed per unit time.
    pub drift_tolerance: T,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self { dt: T::lit(1e-3), method: Method::Gauss6, sample_every: 0, drift_tolerance: T::lit(1e-8) }
    }
}

impl<T: Real> FlowOptions<T> {
    pub fn with_dt(dt: T) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn sampled(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample<T> {
    pub t: T,
    pub x: [T; 2],
    pub xi: [T; 2],
}

#[derive(Clone, Debug)]
pub struct FlowOutput<T> {
    pub state: GeodesicState<T>,
    pub samples: Vec<PathSample<T>>,
    /// `|H(t) − H(0)| / H(0)`.
    pub drift: T,
}

#[inline]
fn vector_field<T: Real, D: Density<T>>(metric: &D, y: &[T; 4]) -> [T; 4] {
    let (r, g) = metric.rho_grad([y[0], y[1]]);
    let inv = r.recip();
    let p2 = y[2] * y[2] + y[3] * y[3];
    let c = p2 * inv * inv * T::lit(0.5);
    [y[2] * inv, y[3] * inv, c * g[0], c * g[1]]
}

/// Integrates Hamilton's equations for time `t` (negative times run backwards).
pub fn flow<T: Real, D: Density<T>>(
    metric: &D,
    s0: &GeodesicState<T>,
    t: T,
    opts: &FlowOptions<T>,
) -> Result<FlowOutput<T>, DynamicsError> {
    let h0 = s0.hamiltonian(metric);
    if !(h0 > T::zero()) {
        return Err(DynamicsError::ZeroMomentum);
    }
    let (n, h) = partition(t, opts.dt);
    let f = |y: &[T; 4]| vector_field(metric, y);
    let mut state = *s0;
    let mut samples = vec![PathSample { t: T::zero(), x: state.lifted(), xi: state.xi }];
    for i in 0..n {
        let y = [state.x[0], state.x[1], state.xi[0], state.xi[1]];
        let y = step(opts.method, &y, h, &f)
            .ok_or(DynamicsError::StepTooLarge { drift: f64::NAN, tolerance: opts.drift_tolerance.as_f64() })?;
        state.x = [y[0], y[1]];
        state.xi = [y[2], y[3]];
        state.normalize();
        let last = i + 1 == n;
        if last || (opts.sample_every > 0 && (i + 1) % opts.sample_every == 0) {
            let ti = if last { t } else { h * T::from_count(i + 1) };
            samples.push(PathSample { t: ti, x: state.lifted(), xi: state.xi });
        }
    }
    let drift = (state.hamiltonian(metric) - h0).abs() / h0;
    let allowed = opts.drift_tolerance * t.abs().max(T::one());
    if !(drift <= allowed) {
        return Err(DynamicsError::StepTooLarge { drift: drift.as_f64(), tolerance: allowed.as_f64() });
    }
    Ok(FlowOutput { state, samples, drift })
}

/// Endpoint only, with the default options.
pub fn flow_to<T: Real, D: Density<T>>(
    metric: &D,
    s0: &GeodesicState<T>,
    t: T,
    dt: T,
) -> Result<GeodesicState<T>, DynamicsError> {
    flow(metric, s0, t, &FlowOptions::with_dt(dt)).map(|o| o.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{LiouvilleMetric, PeriodicFunction};

    #[test]
    fn flat_lines() {
        let flat = LiouvilleMetric::<f64>::flat();
        let s = GeodesicState::new([0.0, 0.0], [1.0, 0.0]);
        let out = flow(&flat, &s, 1.0, &FlowOptions::default()).unwrap();
        let p = out.state.lifted();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);

        let s = GeodesicState::new([0.0, 0.0], [3.0, 4.0]);
        let out = flow(&flat, &s, 1.0, &FlowOptions::default()).unwrap();
        let p = out.state.lifted();
        assert!((p[0] - 3.0).abs() < 1e-12 && (p[1] - 4.0).abs() < 1e-12);
        assert!((s.speed(&flat) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn zero_momentum_rejected() {
        let flat = LiouvilleMetric::<f64>::flat();
        let s = GeodesicState::new([0.2, 0.3], [0.0, 0.0]);
        assert!(matches!(flow(&flat, &s, 1.0, &FlowOptions::default()), Err(DynamicsError::ZeroMomentum)));
    }

    #[test]
    fn coarse_midpoint_reports_drift() {
        let m = LiouvilleMetric::new(PeriodicFunction::cosine(3, 0.4), PeriodicFunction::sine(2, 0.3)).unwrap();
        let s = GeodesicState::unit(&m, [0.1, 0.2], 0.7);
        let opts = FlowOptions { dt: 0.05, method: Method::Midpoint, ..FlowOptions::default() };
        assert!(matches!(flow(&m, &s, 3.0, &opts), Err(DynamicsError::StepTooLarge { .. })));
        let r = flow(&m, &s, 3.0, &FlowOptions::default());
        assert!(r.is_ok(), "{r:?}");
    }

    #[test]
    fn samples_cover_the_run() {
        let flat = LiouvilleMetric::<f64>::flat();
        let s = GeodesicState::new([0.5, 0.5], [0.0, 1.0]);
        let out = flow(&flat, &s, 0.01, &FlowOptions::default().sampled(2)).unwrap();
        assert_eq!(out.samples.len(), 6);
        assert_eq!(out.samples.last().unwrap().t, 0.01);
    }
}
