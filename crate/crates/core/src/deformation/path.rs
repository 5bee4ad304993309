//! Sampled curves on the universal cover and variation fields along them.
//!
//! Samples sit at `t_i = i/N`, `N` a multiple of 8. Derivatives use
//! eighth-order finite differences (one-sided near the ends) applied to the
//! deviation from the chord, and integrals use composite 9-point
//! Newton–Cotes panels.

use crate::deformation::DeformationError;
use crate::scalar::Real;

/// Default number of intervals.
pub const DEFAULT_INTERVALS: usize = 512;

const STENCIL: usize = 9;

/// Fornberg weights for the derivative of order `order` at `z` from values at `nodes`.
fn fd_weights<T: Real>(z: T, nodes: &[T], order: usize) -> Vec<T> {
    let n = nodes.len();
    let mut c = vec![vec![T::zero(); n]; order + 1];
    let mut c1 = T::one();
    let mut c4 = nodes[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j + 1 == i {
                for k in (1..=mn).rev() {
                    let kk = T::from_count(k);
                    c[k][i] = c1 * (kk * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                let kk = T::from_count(k);
                c[k][j] = (c4 * c[k][j] - kk * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(order)
}

fn unit_nodes<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(T::from_count).collect()
}

fn check_intervals(n: usize) -> Result<(), DeformationError> {
    if n < 16 || !n.is_multiple_of(8) {
        return Err(DeformationError::InvalidInput(format!("interval count {n} must be a multiple of 8, at least 16")));
    }
    Ok(())
}

/// First derivative in `t` of samples on `[0, 1]`.
pub(crate) fn differentiate<T: Real>(values: &[[T; 2]]) -> Vec<[T; 2]> {
    let n = values.len() - 1;
    let nodes = unit_nodes::<T>(STENCIL);
    let weights: Vec<Vec<T>> = (0..STENCIL).map(|j| fd_weights(T::from_count(j), &nodes, 1)).collect();
    let scale = T::from_count(n);
    (0..=n)
        .map(|i| {
            let start = i.saturating_sub(STENCIL / 2).min(n + 1 - STENCIL);
            let w = &weights[i - start];
            let mut d = [T::zero(); 2];
            for (j, wj) in w.iter().enumerate() {
                let v = values[start + j];
                d[0] += *wj * v[0];
                d[1] += *wj * v[1];
            }
            [d[0] * scale, d[1] * scale]
        })
        .collect()
}

/// `∫_0^1` of samples at `i/N`, `N` a multiple of 8.
pub(crate) fn integrate<T: Real>(values: &[T]) -> T {
    const W: [f64; 9] = [989.0, 5888.0, -928.0, 10496.0, -4540.0, 10496.0, -928.0, 5888.0, 989.0];
    let n = values.len() - 1;
    let mut total = T::zero();
    for panel in (0..n).step_by(8) {
        let mut s = T::zero();
        for (j, w) in W.iter().enumerate() {
            s += T::lit(*w) * values[panel + j];
        }
        total += s;
    }
    total * T::lit(4.0) / (T::lit(14175.0) * T::from_count(n))
}

/// Values at the interval midpoints by local degree-9 interpolation.
fn midpoints<T: Real>(values: &[[T; 2]]) -> Vec<[T; 2]> {
    let n = values.len() - 1;
    let width = STENCIL + 1;
    let nodes = unit_nodes::<T>(width);
    let half = T::lit(0.5);
    let weights: Vec<Vec<T>> = (0..width - 1).map(|j| fd_weights(T::from_count(j) + half, &nodes, 0)).collect();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2 - 1).min(n + 1 - width);
            let w = &weights[i - start];
            let mut v = [T::zero(); 2];
            for (j, wj) in w.iter().enumerate() {
                let p = values[start + j];
                v[0] += *wj * p[0];
                v[1] += *wj * p[1];
            }
            v
        })
        .collect()
}

/// Curve `γ: [0, 1] → R²` from `a` to `b = a + (m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPath<T> {
    class: (i64, i64),
    points: Vec<[T; 2]>,
}

impl<T: Real> ParamPath<T> {
    /// Requires `points.last() == points[0] + class` exactly.
    pub fn new(class: (i64, i64), points: Vec<[T; 2]>) -> Result<Self, DeformationError> {
        check_intervals(points.len().saturating_sub(1))?;
        let a = points[0];
        let b = points[points.len() - 1];
        if b != Self::target(a, class) {
            return Err(DeformationError::InvalidInput("path end is not start + class".into()));
        }
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(DeformationError::InvalidInput("non-finite path sample".into()));
        }
        Ok(Self { class, points })
    }

    /// Samples `f(i/N)`; the end is pinned to `f(0) + class`.
    pub fn from_fn(class: (i64, i64), intervals: usize, f: impl Fn(T) -> [T; 2]) -> Result<Self, DeformationError> {
        check_intervals(intervals)?;
        let n = T::from_count(intervals);
        let mut points: Vec<[T; 2]> = (0..=intervals).map(|i| f(T::from_count(i) / n)).collect();
        points[intervals] = Self::target(points[0], class);
        Self::new(class, points)
    }

    /// Constant-speed segment from `a` to `a + class`.
    pub fn straight(a: [T; 2], class: (i64, i64), intervals: usize) -> Result<Self, DeformationError> {
        let d = [T::from_int(class.0), T::from_int(class.1)];
        Self::from_fn(class, intervals, |t| [a[0] + d[0] * t, a[1] + d[1] * t])
    }

    fn target(a: [T; 2], class: (i64, i64)) -> [T; 2] {
        [a[0] + T::from_int(class.0), a[1] + T::from_int(class.1)]
    }

    pub fn class(&self) -> (i64, i64) {
        self.class
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> [T; 2] {
        self.points[0]
    }

    pub fn end(&self) -> [T; 2] {
        self.points[self.points.len() - 1]
    }

    pub fn t(&self, i: usize) -> T {
        T::from_count(i) / T::from_count(self.intervals())
    }

    fn chord(&self, i: usize) -> [T; 2] {
        let a = self.start();
        let t = self.t(i);
        [a[0] + T::from_int(self.class.0) * t, a[1] + T::from_int(self.class.1) * t]
    }

    /// `γ(t_i)` minus the chord from `a` to `b`; vanishes at both ends.
    fn deviation(&self) -> Vec<[T; 2]> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let c = self.chord(i);
                [p[0] - c[0], p[1] - c[1]]
            })
            .collect()
    }

    /// `γ̇(t_i)`.
    pub fn velocities(&self) -> Vec<[T; 2]> {
        let d = [T::from_int(self.class.0), T::from_int(self.class.1)];
        differentiate(&self.deviation()).into_iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect()
    }

    /// Same curve sampled on twice as many intervals.
    pub fn refined(&self) -> Self {
        let dev = self.deviation();
        let mid = midpoints(&dev);
        let n = self.intervals();
        let a = self.start();
        let d = [T::from_int(self.class.0), T::from_int(self.class.1)];
        let two_n = T::from_count(2 * n);
        let mut points = Vec::with_capacity(2 * n + 1);
        for i in 0..=2 * n {
            let q = if i % 2 == 0 { dev[i / 2] } else { mid[i / 2] };
            let t = T::from_count(i) / two_n;
            points.push([a[0] + d[0] * t + q[0], a[1] + d[1] * t + q[1]]);
        }
        points[0] = a;
        points[2 * n] = self.end();
        Self { class: self.class, points }
    }

    /// `γ + h·δ`.
    pub fn perturbed(&self, delta: &VariationField<T>, h: T) -> Result<Self, DeformationError> {
        same_size(self.points.len(), delta.values.len())?;
        let points = self.points.iter().zip(&delta.values).map(|(p, d)| [p[0] + h * d[0], p[1] + h * d[1]]).collect();
        Ok(Self { class: self.class, points })
    }

    /// Euclidean length of the polygon through the samples.
    pub fn polygon_length(&self) -> T {
        self.points.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }
}

pub(crate) fn same_size(a: usize, b: usize) -> Result<(), DeformationError> {
    if a == b {
        Ok(())
    } else {
        Err(DeformationError::InvalidInput(format!("sample counts differ: {a} vs {b}")))
    }
}

/// Vector field `δ(t_i)` along a path with `δ(0) = δ(1) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationField<T> {
    values: Vec<[T; 2]>,
}

impl<T: Real> VariationField<T> {
    pub fn new(values: Vec<[T; 2]>) -> Result<Self, DeformationError> {
        check_intervals(values.len().saturating_sub(1))?;
        let zero = [T::zero(); 2];
        if values[0] != zero || values[values.len() - 1] != zero {
            return Err(DeformationError::InvalidInput("variation field must vanish at both ends".into()));
        }
        Ok(Self { values })
    }

    pub fn zero(intervals: usize) -> Result<Self, DeformationError> {
        check_intervals(intervals)?;
        Ok(Self { values: vec![[T::zero(); 2]; intervals + 1] })
    }

    /// Samples `f(i/N)` with the ends set to zero.
    pub fn from_fn(intervals: usize, f: impl Fn(T) -> [T; 2]) -> Result<Self, DeformationError> {
        check_intervals(intervals)?;
        let n = T::from_count(intervals);
        let mut values: Vec<[T; 2]> = (0..=intervals).map(|i| f(T::from_count(i) / n)).collect();
        values[0] = [T::zero(); 2];
        values[intervals] = [T::zero(); 2];
        Ok(Self { values })
    }

    /// `Σ_k c_k sin(πkt)`, `k = 1..`.
    pub fn sine_series(intervals: usize, coeffs: &[[T; 2]]) -> Result<Self, DeformationError> {
        let pi = T::PI();
        Self::from_fn(intervals, |t| {
            let mut v = [T::zero(); 2];
            for (k, c) in coeffs.iter().enumerate() {
                let s = (pi * T::from_count(k + 1) * t).sin();
                v[0] += c[0] * s;
                v[1] += c[1] * s;
            }
            v
        })
    }

    /// `(b − a) / h` for two paths with common endpoints.
    pub fn difference(a: &ParamPath<T>, b: &ParamPath<T>, h: T) -> Result<Self, DeformationError> {
        same_size(a.points.len(), b.points.len())?;
        if a.start() != b.start() || a.end() != b.end() {
            return Err(DeformationError::InvalidInput("paths do not share endpoints".into()));
        }
        let mut values: Vec<[T; 2]> =
            a.points.iter().zip(&b.points).map(|(p, q)| [(q[0] - p[0]) / h, (q[1] - p[1]) / h]).collect();
        let n = values.len() - 1;
        values[0] = [T::zero(); 2];
        values[n] = [T::zero(); 2];
        Ok(Self { values })
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Result<Self, DeformationError> {
        same_size(self.values.len(), other.values.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]])
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[[T; 2]] {
        &self.values
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// `δ̇(t_i)`.
    pub fn derivatives(&self) -> Vec<[T; 2]> {
        differentiate(&self.values)
    }

    /// `max_i |δ(t_i)|`.
    pub fn max_norm(&self) -> T {
        self.values.iter().map(|v| v[0].hypot(v[1])).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_textbook_weights() {
        let nodes = [-1.0f64, 0.0, 1.0];
        let w = fd_weights(0.0, &nodes, 1);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
        let w = fd_weights(0.0, &nodes, 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn derivative_and_integral_of_a_polynomial() {
        let n = 64;
        let vals: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                [t.powi(7), t.powi(8)]
            })
            .collect();
        let d = differentiate(&vals);
        for (i, v) in d.iter().enumerate() {
            let t = i as f64 / n as f64;
            assert!((v[0] - 7.0 * t.powi(6)).abs() < 1e-11);
            assert!((v[1] - 8.0 * t.powi(7)).abs() < 1e-11);
        }
        let f: Vec<f64> = vals.iter().map(|v| v[1]).collect();
        assert!((integrate(&f) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_reproduces_smooth_curves() {
        let p = ParamPath::from_fn((1, 0), 64, |t: f64| [t, 0.1 * (2.0 * std::f64::consts::PI * t).sin()]).unwrap();
        let r = p.refined();
        assert_eq!(r.intervals(), 128);
        for (i, q) in r.points().iter().enumerate() {
            let t = i as f64 / 128.0;
            assert!((q[1] - 0.1 * (2.0 * std::f64::consts::PI * t).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn endpoints_are_pinned() {
        let p = ParamPath::straight([0.3f64, 0.7], (3, 4), 32).unwrap();
        assert_eq!(p.end(), [3.3, 4.7]);
        assert!(ParamPath::new((1, 1), vec![[0.0f64, 0.0]; 33]).is_err());
        assert!(VariationField::new(vec![[1.0f64, 0.0]; 33]).is_err());
    }
}
