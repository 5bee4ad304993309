//! First variation of closed-geodesic lengths: the weighted X-ray transform
//! `(1/2)∫ U/ρ ds` of a perturbation along the geodesics of a rational torus.

use rayon::prelude::*;

use crate::deformation::geodesics::{torus_geodesic, PathOptions};
use crate::deformation::path::{integrate, ParamPath};
use crate::deformation::DeformationError;
use crate::dynamics::{find_rational_torus, CircleIntegrals, RationalTorus};
use crate::metric::{BivariateFunction, Density, LiouvilleMetric};
use crate::quadrature::{singular_quadrature, Power, QuadratureError};
use crate::roots::brent;
use crate::scalar::Real;

/// `n` points on a section of the torus, equidistributed for the invariant
/// transverse measure: on `x1 = 0` uniform in the angle of the `x2` motion
/// for rotational classes; uniform along the section for axial ones, where
/// the transverse coordinate is at rest.
pub fn torus_base_points<T: Real>(
    metric: &LiouvilleMetric<T>,
    torus: &RationalTorus<T>,
    n: usize,
) -> Result<Vec<[T; 2]>, DeformationError> {
    let (m, k) = torus.class;
    let step = |j: usize| T::from_count(j) / T::from_count(n);
    if k == 0 {
        return Ok((0..n).map(|j| [T::zero(), step(j)]).collect());
    }
    if m == 0 {
        return Ok((0..n).map(|j| [step(j), T::zero()]).collect());
    }
    let f2 = metric.f2();
    if f2.is_constant() {
        return Ok((0..n).map(|j| [T::zero(), step(j)]).collect());
    }
    let s = T::one() - torus.e;
    let total = CircleIntegrals::new(f2).inverse(s)?;
    let theta = |y: T| -> Result<T, QuadratureError> {
        if y <= T::zero() {
            Ok(T::zero())
        } else {
            singular_quadrature(f2, s, T::zero(), y, Power::MinusHalf)
        }
    };
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let target = total * step(j);
        if j == 0 {
            out.push([T::zero(), T::zero()]);
            continue;
        }
        let g = |y: T| theta(y).map(|v| v - target);
        let y = brent(g, T::zero(), T::one(), -target, total - target, T::lit(1e-14), 200)?;
        out.push([T::zero(), y]);
    }
    Ok(out)
}

/// `(1/2)∫_0^L U(γ)/ρ(γ) ds` along the torus geodesic through `x`.
pub fn xray<T: Real>(
    metric: &LiouvilleMetric<T>,
    torus: &RationalTorus<T>,
    u: &BivariateFunction<T>,
    x: [T; 2],
    opts: &PathOptions<T>,
) -> Result<T, DeformationError> {
    if u.is_zero() {
        return Ok(T::zero());
    }
    let path = torus_geodesic(metric, torus, x, opts)?;
    Ok(xray_on_path(metric, u, &path, torus.length))
}

/// The same integral along a sampled constant-speed geodesic of length `length`.
pub(crate) fn xray_on_path<T: Real>(
    metric: &LiouvilleMetric<T>,
    u: &BivariateFunction<T>,
    path: &ParamPath<T>,
    length: T,
) -> T {
    let f: Vec<T> = path.points().iter().map(|p| u.eval(*p) / metric.rho(*p)).collect();
    T::lit(0.5) * length * integrate(&f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstVariation<T> {
    pub class: (i64, i64),
    pub length: T,
    pub base_points: Vec<[T; 2]>,
    /// `dℓ/dε` of the loop through each base point.
    pub values: Vec<T>,
    /// Mean over the base points.
    pub average: T,
}

impl<T: Real> FirstVariation<T> {
    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }
}

/// First variation in `ε` of the length of the `(m, n)` loops of `ρ + εU`
/// through `base_points` points of the rational torus.
pub fn first_variation_length<T: Real>(
    metric: &LiouvilleMetric<T>,
    class: (i64, i64),
    u: &BivariateFunction<T>,
    base_points: usize,
    opts: &PathOptions<T>,
) -> Result<FirstVariation<T>, DeformationError> {
    let torus = find_rational_torus(metric, class)?;
    let points = torus_base_points(metric, &torus, base_points.max(1))?;
    let values: Result<Vec<T>, DeformationError> =
        points.par_iter().map(|&x| xray(metric, &torus, u, x, opts)).collect();
    let values = values?;
    let average = values.iter().copied().sum::<T>() / T::from_count(values.len());
    Ok(FirstVariation { class, length: torus.length, base_points: points, values, average })
}
