//! Double-exponential quadrature for `∫ (e + f(x))^{±1/2} dx` with simple
//! zeros of `e + f` at the interval ends.
//!
//! Near a zero the integrand is evaluated from a local model anchored at a
//! polished root, so that the root location and the integrand values agree to
//! working precision. Away from anchors `e + f(x)` is formed as
//! `g(p) + [f(x) - f(p)]` with an accurate difference, which keeps relative
//! accuracy when `e + f` is small but positive.

use thiserror::Error;

use crate::metric::{critical_points, CriticalKind, CriticalSet, PeriodicFunction};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand base vanishes inside the interval near x = {at:.6e}")]
    InteriorZero { at: f64 },
    #[error("integrand base is negative at the endpoint x = {at:.6e}")]
    NegativeEndpoint { at: f64 },
    #[error("empty or reversed interval")]
    InvalidInterval,
    #[error("no convergence: estimate {estimate:.6e}, error {error:.3e}")]
    NotConverged { estimate: f64, error: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Power {
    /// `(e + f)^{-1/2}`
    MinusHalf,
    /// `(e + f)^{+1/2}`
    PlusHalf,
}

impl Power {
    #[inline]
    fn apply<T: Real>(self, g: T) -> T {
        match self {
            Power::MinusHalf => g.sqrt().recip(),
            Power::PlusHalf => g.sqrt(),
        }
    }
}

/// Tanh–sinh rule with level doubling.
#[derive(Clone, Copy, Debug)]
pub struct TanhSinh<T> {
    pub rel_tol: T,
    /// Absolute floor on the error target.
    pub abs_tol: T,
    pub min_level: u32,
    pub max_level: u32,
}

impl<T: Real> Default for TanhSinh<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-13), abs_tol: T::lit(1e-14), min_level: 3, max_level: 12 }
    }
}

impl<T: Real> TanhSinh<T> {
    /// Looser rule for scans where only signs matter.
    pub fn coarse() -> Self {
        Self { rel_tol: T::lit(1e-9), abs_tol: T::lit(1e-12), min_level: 2, max_level: 10 }
    }

    fn t_max() -> T {
        let u_max = -T::min_positive_value().ln() * T::lit(0.5);
        (u_max * T::lit(2.0) / T::PI()).asinh()
    }

    /// `∫_0^L h`, where `h(d_left, d_right)` receives the distances of the
    /// node from both ends (each exact, without cancellation).
    pub fn integrate<F>(&self, length: T, mut h: F) -> Result<T, QuadratureError>
    where
        F: FnMut(T, T) -> Result<T, QuadratureError>,
    {
        if !(length > T::zero()) {
            return if length == T::zero() { Ok(T::zero()) } else { Err(QuadratureError::InvalidInterval) };
        }
        let t_max = Self::t_max();
        let pi = T::PI();
        let half = T::lit(0.5);
        let tiny = T::epsilon() * T::lit(1e-6);
        let mut node = |t: T| -> Result<T, QuadratureError> {
            let u = half * pi * t.sinh();
            let e2 = (-(u + u).abs()).exp();
            let inv = (T::one() + e2).recip();
            let near = length * e2 * inv;
            let far = length * inv;
            let w = length * pi * t.cosh() * e2 * inv * inv;
            if near == T::zero() || w == T::zero() {
                return Ok(T::zero());
            }
            let v = if t >= T::zero() { h(far, near)? } else { h(near, far)? };
            Ok(w * v)
        };
        let mut sum = node(T::zero())?;
        let mut step = T::one();
        // Level 0: all integer nodes.
        for sign in [T::one(), -T::one()] {
            let mut k = 1;
            loop {
                let t = T::from_count(k) * sign;
                if t.abs() > t_max {
                    break;
                }
                let term = node(t)?;
                sum += term;
                if k > 3 && term.abs() <= tiny * sum.abs() {
                    break;
                }
                k += 1;
            }
        }
        let mut estimate = sum * step;
        let mut last_diff = T::infinity();
        for level in 1..=self.max_level {
            step *= half;
            let mut add = T::zero();
            for sign in [T::one(), -T::one()] {
                let mut k = 1;
                let mut small = 0;
                loop {
                    let t = T::from_count(k) * step * sign;
                    if t.abs() > t_max {
                        break;
                    }
                    let term = node(t)?;
                    add += term;
                    if t.abs() > T::one() && term.abs() <= tiny * (sum + add).abs() {
                        small += 1;
                        if small >= 2 {
                            break;
                        }
                    } else {
                        small = 0;
                    }
                    k += 2;
                }
            }
            sum += add;
            let next = sum * step;
            let diff = (next - estimate).abs();
            estimate = next;
            last_diff = diff;
            if level >= self.min_level && diff <= (self.rel_tol * estimate.abs()).max(self.abs_tol) {
                return Ok(estimate);
            }
        }
        Err(QuadratureError::NotConverged { estimate: estimate.as_f64(), error: last_diff.as_f64() })
    }
}

/// `g(x) = shift + f(x)`.
#[derive(Clone, Copy, Debug)]
pub struct Shifted<'a, T> {
    pub f: &'a PeriodicFunction<T>,
    pub shift: T,
}

impl<'a, T: Real> Shifted<'a, T> {
    pub fn new(f: &'a PeriodicFunction<T>, shift: T) -> Self {
        Self { f, shift }
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        self.shift + self.f.eval(x)
    }
}

/// Point from which `g` is evaluated by differences. Root anchors also carry
/// a cubic Taylor model and the offset `eta` of the model's root from `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor<T> {
    p: T,
    eta: T,
    c: T,
    s1: T,
    s2: T,
    s3: T,
    radius: T,
}

impl<T: Real> Anchor<T> {
    pub fn regular(g: &Shifted<'_, T>, p: T) -> Self {
        Self { p, eta: T::zero(), c: g.eval(p), s1: T::zero(), s2: T::zero(), s3: T::zero(), radius: T::zero() }
    }

    /// Anchor at the simple zero of `g` closest to `guess`.
    pub fn root(g: &Shifted<'_, T>, guess: T) -> Self {
        let mut p = guess;
        let mut best = (g.eval(p).abs(), p);
        for _ in 0..12 {
            let j = g.f.jet(p);
            let val = g.shift + j[0];
            if j[1] == T::zero() {
                break;
            }
            let step = val / j[1];
            p -= step;
            let r = g.eval(p).abs();
            if r < best.0 {
                best = (r, p);
            }
            if step.abs() <= T::epsilon() * (T::one() + p.abs()) {
                break;
            }
        }
        let p = best.1;
        let j = g.f.jet(p);
        let c = g.shift + j[0];
        let (s1, s2, s3) = (j[1], j[2], j[3]);
        let six = T::lit(6.0);
        let mut eta = if s1 != T::zero() { -c / s1 } else { T::zero() };
        for _ in 0..3 {
            let r = c + eta * (s1 + eta * (s2 * T::lit(0.5) + eta * s3 / six));
            let d = s1 + eta * (s2 + eta * s3 * T::lit(0.5));
            if d == T::zero() {
                break;
            }
            eta -= r / d;
        }
        let m4 = g.f.derivative_bound(4).max(T::min_positive_value());
        let radius = (T::lit(24.0) * T::epsilon() * s1.abs() / m4).cbrt();
        Self { p, eta, c, s1, s2, s3, radius }
    }

    /// Location of the anchor as an unevaluated sum `p + eta`.
    pub fn location(&self) -> (T, T) {
        (self.p, self.eta)
    }

    pub fn point(&self) -> T {
        self.p + self.eta
    }

    pub fn is_root(&self) -> bool {
        self.radius > T::zero() || self.s1 != T::zero()
    }

    /// Slope of `g` at the anchor (roots only).
    pub fn slope(&self) -> T {
        self.s1
    }

    /// `g((p + eta) + d)`.
    #[inline]
    pub fn eval(&self, g: &Shifted<'_, T>, d: T) -> T {
        if d.abs() <= self.radius {
            let half = T::lit(0.5);
            let eta = self.eta;
            let three = T::lit(3.0);
            self.s1 * d
                + self.s2 * half * (eta + eta + d) * d
                + self.s3 / T::lit(6.0) * (three * eta * eta + three * eta * d + d * d) * d
        } else {
            self.c + g.f.difference(self.p, self.eta + d)
        }
    }
}

/// `∫ g^power` between two anchors.
pub fn integrate_between<T: Real>(
    g: &Shifted<'_, T>,
    left: &Anchor<T>,
    right: &Anchor<T>,
    power: Power,
    rule: &TanhSinh<T>,
) -> Result<T, QuadratureError> {
    let length = (right.p - left.p) + (right.eta - left.eta);
    if !(length >= T::zero()) {
        return Err(QuadratureError::InvalidInterval);
    }
    rule.integrate(length, |da, db| {
        let v = if da <= db { left.eval(g, da) } else { right.eval(g, -db) };
        if v > T::zero() {
            Ok(power.apply(v))
        } else if power == Power::PlusHalf {
            Ok(T::zero())
        } else {
            Err(QuadratureError::InteriorZero { at: (left.point() + da).as_f64() })
        }
    })
}

/// `∫_a^b (e + f(x))^power dx` where `e + f > 0` on `(a, b)` and may vanish
/// (simply) at `a` and/or `b`.
pub fn singular_quadrature<T: Real>(
    f: &PeriodicFunction<T>,
    e: T,
    a: T,
    b: T,
    power: Power,
) -> Result<T, QuadratureError> {
    if !(b > a) {
        return Err(QuadratureError::InvalidInterval);
    }
    let g = Shifted::new(f, e);
    let scale = e.abs() + f.derivative_bound(0);
    let zero_tol = T::lit(1e-9) * scale.max(T::one());
    let end_anchor = |x: T| -> Result<Anchor<T>, QuadratureError> {
        let v = g.eval(x);
        if v.abs() <= zero_tol {
            Ok(Anchor::root(&g, x))
        } else if v > T::zero() {
            Ok(Anchor::regular(&g, x))
        } else {
            Err(QuadratureError::NegativeEndpoint { at: x.as_f64() })
        }
    };
    let left = end_anchor(a)?;
    let right = end_anchor(b)?;

    // Interior breakpoints: local minima of f (where e + f is smallest) and bump edges.
    let mut breaks = Vec::new();
    let crit = critical_points(f);
    let lo = a.floor().to_i64().unwrap_or(0) - 1;
    let hi = b.ceil().to_i64().unwrap_or(0) + 1;
    for shift in lo..=hi {
        let s = T::from_int(shift);
        for c in &crit {
            let (ca, cb) = c.span();
            let (ca, cb) = (ca + s, cb + s);
            if cb <= a || ca >= b {
                continue;
            }
            let probe = c.representative();
            if c.value() + e <= T::zero() {
                let at = ((ca.max(a) + cb.min(b)) * T::lit(0.5)).as_f64();
                return Err(QuadratureError::InteriorZero { at });
            }
            if matches!(c, CriticalSet::Point { kind: CriticalKind::Min, .. }) {
                let x = probe + s;
                let x = if x < a { x + T::one() } else { x };
                if x > a && x < b {
                    breaks.push(x);
                }
            }
        }
        for x in f.breakpoints() {
            let x = x + s;
            if x > a && x < b {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup();
    let min_gap = (b - a) * T::lit(1e-9);
    let mut anchors = vec![left];
    for x in breaks {
        if x - anchors.last().unwrap().point() > min_gap && right.point() - x > min_gap {
            anchors.push(Anchor::regular(&g, x));
        }
    }
    anchors.push(right);
    let rule = TanhSinh::default();
    let mut total = T::zero();
    for w in anchors.windows(2) {
        total += integrate_between(&g, &w[0], &w[1], power, &rule)?;
    }
    Ok(total)
}

/// Integrals of `(shift + f)^power` over a full period, for `shift + f > 0`.
#[derive(Clone, Debug)]
pub struct CircleIntegrator<'a, T> {
    f: &'a PeriodicFunction<T>,
    breaks: Vec<T>,
    min_f: T,
    rule: TanhSinh<T>,
}

impl<'a, T: Real> CircleIntegrator<'a, T> {
    pub fn new(f: &'a PeriodicFunction<T>) -> Self {
        let crit = critical_points(f);
        let mut breaks: Vec<T> = crit
            .iter()
            .filter(|c| c.kind() == CriticalKind::Min)
            .map(|c| match *c {
                CriticalSet::Point { x, .. } => x,
                CriticalSet::Interval { a, .. } => a,
            })
            .collect();
        breaks.extend(f.breakpoints());
        breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
        breaks.dedup_by(|p, q| (*p - *q).abs() < T::lit(1e-12));
        if breaks.is_empty() {
            breaks.push(T::zero());
        }
        let min_f = crit.iter().map(|c| c.value()).fold(f.eval(T::zero()), T::min);
        Self { f, breaks, min_f, rule: TanhSinh::default() }
    }

    pub fn with_rule(mut self, rule: TanhSinh<T>) -> Self {
        self.rule = rule;
        self
    }

    pub fn integrate(&self, shift: T, power: Power) -> Result<T, QuadratureError> {
        if shift + self.min_f <= T::zero() {
            return Err(QuadratureError::InteriorZero { at: f64::NAN });
        }
        if self.f.is_constant() {
            return Ok(power.apply(shift + self.f.eval(T::zero())));
        }
        if let Some(v) = self.trapezoid(shift, power) {
            return Ok(v);
        }
        let g = Shifted::new(self.f, shift);
        let n = self.breaks.len();
        let mut total = T::zero();
        for i in 0..n {
            let a = self.breaks[i];
            let b = if i + 1 < n { self.breaks[i + 1] } else { self.breaks[0] + T::one() };
            total += integrate_between(&g, &Anchor::regular(&g, a), &Anchor::regular(&g, b), power, &self.rule)?;
        }
        Ok(total)
    }

    /// Periodic trapezoid rule with doubling; `None` when it does not settle quickly.
    fn trapezoid(&self, shift: T, power: Power) -> Option<T> {
        let tol = self.rule.rel_tol * T::lit(0.1);
        let mut n = 32usize;
        let mut sum = T::zero();
        for i in 0..n {
            sum += power.apply(shift + self.f.eval(T::from_count(i) / T::from_count(n)));
        }
        let mut prev = sum / T::from_count(n);
        while n < 4096 {
            for i in 0..n {
                let x = (T::from_count(2 * i + 1)) / T::from_count(2 * n);
                sum += power.apply(shift + self.f.eval(x));
            }
            n *= 2;
            let cur = sum / T::from_count(n);
            if (cur - prev).abs() <= tol * cur.abs() {
                return Some(cur);
            }
            prev = cur;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Bump;

    #[test]
    fn constant_integrands() {
        let f = PeriodicFunction::<f64>::zero();
        let v = singular_quadrature(&f, 1.0, 0.0, 1.0, Power::MinusHalf).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let v = singular_quadrature(&f, 4.0, 0.0, 1.0, Power::PlusHalf).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_polynomial() {
        let r = TanhSinh::<f64>::default();
        let v = r.integrate(2.0, |da, _| Ok(da * da)).unwrap();
        assert!((v - 8.0 / 3.0).abs() < 1e-13);
        // 1/sqrt endpoint singularity
        let v = r.integrate(1.0, |da, _| Ok(da.sqrt().recip())).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interior_zero_detected() {
        let f = PeriodicFunction::cosine(1, 1.0);
        let err = singular_quadrature(&f, 0.0, 0.0, 0.5, Power::MinusHalf).unwrap_err();
        assert!(matches!(err, QuadratureError::InteriorZero { .. } | QuadratureError::NegativeEndpoint { .. }));
        let err = singular_quadrature(&f, -0.5, -0.3, 0.3, Power::MinusHalf).unwrap_err();
        assert!(matches!(err, QuadratureError::NegativeEndpoint { .. }));
        let g = PeriodicFunction::cosine(2, 1.0);
        let err = singular_quadrature(&g, 0.0, -0.125, 0.625, Power::PlusHalf).unwrap_err();
        assert!(matches!(err, QuadratureError::InteriorZero { .. }));
    }

    #[test]
    fn circle_integrator_matches_trapezoid_and_tanh_sinh() {
        let f = PeriodicFunction::new(vec![0.0, 0.1, 0.02], vec![0.03]).unwrap();
        let ci = CircleIntegrator::new(&f);
        let v = ci.integrate(1.0, Power::MinusHalf).unwrap();
        let n = 1 << 14;
        let want: f64 = (0..n).map(|i| (1.0 + f.eval(i as f64 / n as f64)).powf(-0.5)).sum::<f64>() / n as f64;
        assert!((v - want).abs() < 1e-14);
        // Nearly singular: e just above -min f forces the split path.
        let min = crate::metric::extrema(&f).min;
        let v = ci.integrate(-min + 1e-10, Power::MinusHalf).unwrap();
        assert!(v.is_finite() && v > 1.0);
    }

    #[test]
    fn bump_root_anchor() {
        let f = PeriodicFunction::<f64>::bump(Bump::new(0.5, 0.2, 1.0)).unwrap();
        let g = Shifted::new(&f, -0.5);
        let a = Anchor::root(&g, 0.38);
        assert!(g.eval(a.point()).abs() < 1e-15);
    }
}
