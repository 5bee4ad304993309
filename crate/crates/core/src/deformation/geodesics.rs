//! Constant-speed geodesic paths: torus geodesics, geodesic loops of
//! perturbed metrics, their continuation in `ε` and the first-order
//! variation `γ¹ = ∂_ε γ_ε` at `ε = 0`.

use crate::deformation::path::{ParamPath, VariationField, DEFAULT_INTERVALS};
use crate::deformation::DeformationError;
use crate::dynamics::{
    flow, loop_function, shoot_loop, FlowOptions, GeodesicState, LoopOptions, LoopSolution, RationalTorus,
};
use crate::metric::{ConformalMetric, Density, LiouvilleMetric};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct PathOptions<T> {
    pub intervals: usize,
    /// Largest flow step used to generate the samples.
    pub max_dt: T,
    /// Allowed endpoint mismatch before pinning, times `max(1, L)`.
    pub closure_tolerance: T,
    pub loops: LoopOptions<T>,
}

impl<T: Real> Default for PathOptions<T> {
    fn default() -> Self {
        Self {
            intervals: DEFAULT_INTERVALS,
            max_dt: T::lit(1e-3),
            closure_tolerance: T::lit(1e-8),
            loops: LoopOptions::default(),
        }
    }
}

/// Flows the unit-speed state `s0` for time `length` and samples it at
/// `t_i = i/N` of the rescaled time; the end is pinned to `x + class`.
pub fn sampled_geodesic<T: Real, D: Density<T>>(
    metric: &D,
    s0: &GeodesicState<T>,
    length: T,
    class: (i64, i64),
    opts: &PathOptions<T>,
) -> Result<ParamPath<T>, DeformationError> {
    let n = opts.intervals;
    let per = (length / (T::from_count(n) * opts.max_dt)).ceil().to_usize().unwrap_or(1).max(1);
    let dt = length / T::from_count(n * per);
    let fo = FlowOptions { dt, sample_every: per, ..opts.loops.flow };
    let out = flow(metric, s0, length, &fo)?;
    if out.samples.len() != n + 1 {
        return Err(DeformationError::InvalidInput(format!(
            "flow produced {} samples, expected {}",
            out.samples.len(),
            n + 1
        )));
    }
    let mut points: Vec<[T; 2]> = out.samples.iter().map(|s| s.x).collect();
    let a = points[0];
    let target = [a[0] + T::from_int(class.0), a[1] + T::from_int(class.1)];
    let last = points[n];
    let miss = (last[0] - target[0]).hypot(last[1] - target[1]);
    if !(miss <= opts.closure_tolerance * length.max(T::one())) {
        return Err(DeformationError::NotClosed { residual: miss.as_f64() });
    }
    points[n] = target;
    ParamPath::new(class, points)
}

/// The geodesic of a rational torus through `x`.
pub fn torus_geodesic<T: Real>(
    metric: &LiouvilleMetric<T>,
    torus: &RationalTorus<T>,
    x: [T; 2],
    opts: &PathOptions<T>,
) -> Result<ParamPath<T>, DeformationError> {
    sampled_geodesic(metric, &torus.state(metric, x), torus.length, torus.class, opts)
}

/// Geodesic loop from `x` to `x + class` continued from the rational torus
/// of the base metric.
pub fn geodesic_loop<T: Real>(
    metric: &ConformalMetric<T>,
    class: (i64, i64),
    x: [T; 2],
    opts: &PathOptions<T>,
) -> Result<(ParamPath<T>, LoopSolution<T>), DeformationError> {
    let sol = loop_function(metric, class, x, &opts.loops)?;
    let path = sampled_geodesic(metric, &GeodesicState::new(x, sol.covector), sol.length, class, opts)?;
    Ok((path, sol))
}

/// `γ_ε` from `a` to `a + class` for each `ε` in turn, for the family
/// `ρ + εU` given by the base and perturbation of `family`. Each solve is
/// seeded from the previous one when the step in `ε` is at most the
/// continuation step, and from the rational torus otherwise.
pub fn geodesic_continuation<T: Real>(
    family: &ConformalMetric<T>,
    class: (i64, i64),
    a: [T; 2],
    epsilons: &[T],
    opts: &PathOptions<T>,
) -> Result<Vec<ParamPath<T>>, DeformationError> {
    let mut out = Vec::with_capacity(epsilons.len());
    let mut prev: Option<(T, LoopSolution<T>)> = None;
    for &e in epsilons {
        let m = family.with_epsilon(e)?;
        let sol = match prev {
            Some((pe, s)) if (e - pe).abs() <= opts.loops.epsilon_step => {
                shoot_loop(&m, class, a, (s.theta, s.length), &opts.loops)?
            }
            _ => loop_function(&m, class, a, &opts.loops)?,
        };
        out.push(sampled_geodesic(&m, &GeodesicState::new(a, sol.covector), sol.length, class, opts)?);
        prev = Some((e, sol));
    }
    Ok(out)
}

/// Paths at `ε ∈ {0, h/2, h}` and the Richardson estimate of `γ¹`.
#[derive(Clone, Debug)]
pub struct FirstOrder<T> {
    pub h: T,
    pub base: ParamPath<T>,
    pub half: ParamPath<T>,
    pub full: ParamPath<T>,
    /// `2·(γ_{h/2} − γ_0)/(h/2) − (γ_h − γ_0)/h`.
    pub gamma1: VariationField<T>,
}

pub fn first_order<T: Real>(
    family: &ConformalMetric<T>,
    class: (i64, i64),
    a: [T; 2],
    h: T,
    opts: &PathOptions<T>,
) -> Result<FirstOrder<T>, DeformationError> {
    let half_h = h * T::lit(0.5);
    let mut paths = geodesic_continuation(family, class, a, &[T::zero(), half_h, h], opts)?.into_iter();
    let (base, half, full) = (paths.next().unwrap(), paths.next().unwrap(), paths.next().unwrap());
    let d_half = VariationField::difference(&base, &half, half_h)?;
    let d_full = VariationField::difference(&base, &full, h)?;
    let gamma1 = d_half.combine(T::lit(2.0), &d_full, -T::one())?;
    Ok(FirstOrder { h, base, half, full, gamma1 })
}
