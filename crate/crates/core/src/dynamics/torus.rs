//! Rational invariant tori of Liouville metrics and the twist check.

use crate::dynamics::flow::{flow, FlowOptions, GeodesicState};
use crate::dynamics::DynamicsError;
use crate::metric::{ConformalMetric, Density, LiouvilleMetric, PeriodicFunction};
use crate::quadrature::{CircleIntegrator, Power, QuadratureError, TanhSinh};
use crate::roots::brent;
use crate::scalar::Real;

/// Distance kept from the ends of the admissible range of `e`.
const BRACKET_DELTA: f64 = 1e-12;

/// Period integrals of one profile: `∫ (s + f)^{±1/2}` over the circle.
#[derive(Clone, Debug)]
pub struct CircleIntegrals<'a, T> {
    inner: CircleIntegrator<'a, T>,
}

impl<'a, T: Real> CircleIntegrals<'a, T> {
    pub fn new(f: &'a PeriodicFunction<T>) -> Self {
        Self { inner: CircleIntegrator::new(f) }
    }

    pub fn with_rule(f: &'a PeriodicFunction<T>, rule: TanhSinh<T>) -> Self {
        Self { inner: CircleIntegrator::new(f).with_rule(rule) }
    }

    /// `∫ (s + f)^{-1/2}`.
    pub fn inverse(&self, s: T) -> Result<T, QuadratureError> {
        self.inner.integrate(s, Power::MinusHalf)
    }

    /// `∫ (s + f)^{1/2}`.
    pub fn root(&self, s: T) -> Result<T, QuadratureError> {
        self.inner.integrate(s, Power::PlusHalf)
    }
}

/// An invariant torus all of whose geodesics close up in class `(m, n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalTorus<T> {
    pub class: (i64, i64),
    /// Energy split: `x1'² = 2(e + f1)`, `x2'² = 2(1 − e + f2)`.
    pub e: T,
    /// Return time of the unit-speed flow (equal to `length`).
    pub period: T,
    pub length: T,
    /// Return time in the separated parametrization.
    pub maupertuis_period: T,
}

fn signum(k: i64) -> i64 {
    k.signum()
}

impl<T: Real> RationalTorus<T> {
    /// Unit covector of the torus section at `x`.
    pub fn covector(&self, metric: &LiouvilleMetric<T>, x: [T; 2]) -> [T; 2] {
        let g1 = (self.e + metric.f1().eval(x[0])).max(T::zero());
        let g2 = (T::one() - self.e + metric.f2().eval(x[1])).max(T::zero());
        [T::from_int(signum(self.class.0)) * g1.sqrt(), T::from_int(signum(self.class.1)) * g2.sqrt()]
    }

    /// Phase-space point of the torus over `x`.
    pub fn state(&self, metric: &LiouvilleMetric<T>, x: [T; 2]) -> GeodesicState<T> {
        GeodesicState::new(x, self.covector(metric, x))
    }

    /// Angle of the section covector at `x`.
    pub fn angle(&self, metric: &LiouvilleMetric<T>, x: [T; 2]) -> T {
        let c = self.covector(metric, x);
        c[1].atan2(c[0])
    }
}

/// `|m|∫dx1/√(e+f1) − |n|∫dx2/√(1−e+f2)`, strictly decreasing in `e`.
pub fn matching_function<T: Real>(
    i1: &CircleIntegrals<'_, T>,
    i2: &CircleIntegrals<'_, T>,
    class: (i64, i64),
    e: T,
) -> Result<T, QuadratureError> {
    let (m, n) = (T::from_int(class.0.abs()), T::from_int(class.1.abs()));
    Ok(m * i1.inverse(e)? - n * i2.inverse(T::one() - e)?)
}

/// Admissible range `(−min f1, 1 + min f2)` of `e` for rotational classes.
pub fn rotational_range<T: Real>(metric: &LiouvilleMetric<T>) -> (T, T) {
    (-metric.extrema1().min, T::one() + metric.extrema2().min)
}

pub fn find_rational_torus<T: Real>(
    metric: &LiouvilleMetric<T>,
    class: (i64, i64),
) -> Result<RationalTorus<T>, DynamicsError> {
    let (m, n) = class;
    if m == 0 && n == 0 {
        return Err(DynamicsError::InvalidInput("class (0, 0) has no closed geodesics".into()));
    }
    let i1 = CircleIntegrals::new(metric.f1());
    let i2 = CircleIntegrals::new(metric.f2());
    let sqrt2 = T::lit(2.0).sqrt();
    if n == 0 || m == 0 {
        // Axial class: a torus exists only when the transverse profile is constant.
        let (k, across, ia) = if n == 0 { (m.abs(), metric.f2(), &i1) } else { (n.abs(), metric.f1(), &i2) };
        if !across.is_constant() {
            return Err(DynamicsError::NoTorus { m, n });
        }
        let shift = T::one() + across.mean();
        let kk = T::from_int(k);
        let length = kk * ia.root(shift)?;
        let e = if n == 0 { shift } else { -across.mean() };
        return Ok(RationalTorus {
            class,
            e,
            period: length,
            length,
            maupertuis_period: kk * ia.inverse(shift)? / sqrt2,
        });
    }
    let (lo_end, hi_end) = rotational_range(metric);
    let phi = |e: T| matching_function(&i1, &i2, class, e);
    // Bracket ends sit next to near-double roots of e + f; only their signs
    // are needed, so they use the looser rule.
    let (c1, c2) = (
        CircleIntegrals::with_rule(metric.f1(), TanhSinh::coarse()),
        CircleIntegrals::with_rule(metric.f2(), TanhSinh::coarse()),
    );
    let sign_phi = |e: T| matching_function(&c1, &c2, class, e);
    let width = hi_end - lo_end;
    let floor = T::epsilon() * T::lit(8.0) * (T::one() + lo_end.abs().max(hi_end.abs()));
    let mut delta = T::lit(BRACKET_DELTA) * width.max(T::one());
    let (lo, hi, flo, fhi) = loop {
        let (lo, hi) = (lo_end + delta, hi_end - delta);
        let (flo, fhi) = (sign_phi(lo)?, sign_phi(hi)?);
        if flo >= T::zero() && fhi <= T::zero() {
            break (lo, hi, flo, fhi);
        }
        delta *= T::lit(1e-2);
        if delta < floor {
            return Err(DynamicsError::NoTorus { m, n });
        }
    };
    let e = brent(phi, lo, hi, flo, fhi, T::lit(1e-15) * width, 200)?;
    let (mm, nn) = (T::from_int(m.abs()), T::from_int(n.abs()));
    let length = mm * i1.root(e)? + nn * i2.root(T::one() - e)?;
    let maupertuis_period = mm * i1.inverse(e)? / sqrt2;
    Ok(RationalTorus { class, e, period: length, length, maupertuis_period })
}

/// Numerical rank of the twist map of a torus at `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwistReport<T> {
    pub rank: usize,
    pub singular_values: [T; 2],
    pub condition: T,
    pub jacobian: [[T; 2]; 2],
}

fn singular_values_2x2<T: Real>(a: &[[T; 2]; 2]) -> [T; 2] {
    let (p, q, r, s) = (a[0][0], a[0][1], a[1][0], a[1][1]);
    let e = (p + s) * T::lit(0.5);
    let f = (p - s) * T::lit(0.5);
    let g = (r + q) * T::lit(0.5);
    let h = (r - q) * T::lit(0.5);
    let qn = e.hypot(h);
    let rn = f.hypot(g);
    [qn + rn, (qn - rn).abs()]
}

/// Jacobian of `u ↦ π Φ^T(x, s(x) + u)` by central differences with step
/// `step`, where `s` is the torus section of the base metric and `T` its
/// period.
pub fn twist_rank<T: Real>(
    metric: &ConformalMetric<T>,
    torus: &RationalTorus<T>,
    x: [T; 2],
    step: T,
) -> Result<TwistReport<T>, DynamicsError> {
    let xi = torus.covector(metric.base(), x);
    let opts = FlowOptions::default();
    let end = |u: [T; 2]| -> Result<[T; 2], DynamicsError> {
        let s = GeodesicState::new(x, [xi[0] + u[0], xi[1] + u[1]]);
        Ok(flow(metric, &s, torus.period, &opts)?.state.lifted())
    };
    let mut jac = [[T::zero(); 2]; 2];
    for k in 0..2 {
        let mut u = [T::zero(); 2];
        u[k] = step;
        let plus = end(u)?;
        u[k] = -step;
        let minus = end(u)?;
        for i in 0..2 {
            jac[i][k] = (plus[i] - minus[i]) / (step + step);
        }
    }
    let sv = singular_values_2x2(&jac);
    let rank = sv.iter().filter(|s| **s > T::lit(1e-6) * sv[0]).count();
    let condition = if sv[1] > T::zero() { sv[0] / sv[1] } else { T::infinity() };
    Ok(TwistReport { rank, singular_values: sv, condition, jacobian: jac })
}

/// Maximum distance between `x + (m, n)` and the time-`T` endpoint over the
/// given base points.
pub fn closure_error<T: Real, D: Density<T>>(
    metric: &D,
    base: &LiouvilleMetric<T>,
    torus: &RationalTorus<T>,
    points: &[[T; 2]],
) -> Result<T, DynamicsError> {
    let opts = FlowOptions::default();
    let mut worst = T::zero();
    for &x in points {
        let end = flow(metric, &torus.state(base, x), torus.period, &opts)?.state.lifted();
        let dx = end[0] - x[0] - T::from_int(torus.class.0);
        let dy = end[1] - x[1] - T::from_int(torus.class.1);
        worst = worst.max(dx.hypot(dy));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_tori() {
        let flat = LiouvilleMetric::<f64>::flat();
        for (m, n) in [(1i64, 1i64), (2, 1), (3, -4), (-1, 5)] {
            let t = find_rational_torus(&flat, (m, n)).unwrap();
            let (mf, nf) = (m as f64, n as f64);
            assert!((t.e - mf * mf / (mf * mf + nf * nf)).abs() < 1e-12, "{m},{n}: {}", t.e);
            assert!((t.length - (mf * mf + nf * nf).sqrt()).abs() < 1e-12);
        }
        let axial = find_rational_torus(&flat, (0, 2)).unwrap();
        assert!((axial.length - 2.0).abs() < 1e-15);
    }

    #[test]
    fn axial_class_needs_constant_profile() {
        let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, 0.1), PeriodicFunction::zero()).unwrap();
        let t = find_rational_torus(&m, (1, 0)).unwrap();
        assert_eq!(t.e, 1.0);
        assert!(matches!(find_rational_torus(&m, (0, 1)), Err(DynamicsError::NoTorus { .. })));
    }

    #[test]
    fn singular_values_of_rotation_scaling() {
        let a = [[0.0f64, -2.0], [2.0, 0.0]];
        let s = singular_values_2x2(&a);
        assert!((s[0] - 2.0).abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15);
        let b = [[3.0f64, 0.0], [0.0, 0.0]];
        assert_eq!(singular_values_2x2(&b), [3.0, 0.0]);
    }

    #[test]
    fn flat_twist_is_full_rank() {
        let flat: ConformalMetric<f64> = LiouvilleMetric::flat().into();
        let t = find_rational_torus(flat.base(), (2, 1)).unwrap();
        let r = twist_rank(&flat, &t, [0.3, 0.6], 1e-5).unwrap();
        assert_eq!(r.rank, 2);
        assert!((r.singular_values[0] - 5f64.sqrt()).abs() < 1e-6);
    }
}
