use crate::metric::MetricError;
use crate::scalar::{two_pi, Real};

/// `∫_{-1}^{1} exp(1 - 1/(1-u²)) du`.
const BUMP_MASS: f64 = 1.206_900_322_437_876_2;

/// Upper bounds on `max_u |dʳ/duʳ exp(1 - 1/(1-u²))|` for r = 0..=5,
/// from a dense scan with a few percent added.
const BUMP_DERIVATIVE_BOUNDS: [f64; 6] = [1.0, 2.28, 22.2, 533.0, 23_800.0, 1.71e6];

/// Beyond this value of `1/(1-u²)` the bump is below the smallest normal f64.
const BUMP_CUTOFF: f64 = 700.0;

/// Smooth compactly supported profile `height · exp(1 - 1/(1-u²))`,
/// `u = (x - center)/half_width`, repeated with period 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump<T> {
    pub center: T,
    pub half_width: T,
    pub height: T,
}

impl<T: Real> Bump<T> {
    pub fn new(center: T, half_width: T, height: T) -> Self {
        Self { center, half_width, height }
    }

    fn validate(&self, index: usize) -> Result<(), MetricError> {
        let ok = self.center.is_finite()
            && self.height.is_finite()
            && self.half_width.is_finite()
            && self.half_width > T::zero()
            && self.half_width < T::lit(0.5);
        if ok {
            Ok(())
        } else {
            Err(MetricError::InvalidBump {
                index,
                reason: "half_width must lie in (0, 0.5) and all fields must be finite".into(),
            })
        }
    }

    /// Signed periodic offset of `x` from the center, in `[-1/2, 1/2)`.
    #[inline]
    fn offset(&self, x: T) -> T {
        let d = x - self.center;
        d - (d + T::lit(0.5)).floor()
    }

    /// Support `[center - w, center + w]` reduced so that the left end is in `[0, 1)`.
    pub fn support(&self) -> (T, T) {
        let a = (self.center - self.half_width).frac();
        (a, a + self.half_width + self.half_width)
    }

    pub fn mass(&self) -> T {
        self.height * self.half_width * T::lit(BUMP_MASS)
    }

    /// Value and first three derivatives.
    fn jet(&self, x: T) -> [T; 4] {
        let w = self.half_width;
        let u = self.offset(x) / w;
        if u.abs() >= T::one() {
            return [T::zero(); 4];
        }
        let q = (T::one() - u) * (T::one() + u);
        let inv = q.recip();
        if inv > T::lit(BUMP_CUTOFF) {
            return [T::zero(); 4];
        }
        let e = self.height * (T::one() - inv).exp();
        let two = T::lit(2.0);
        let g1 = -two * u * inv * inv;
        let g2 = -two * (T::one() + T::lit(3.0) * u * u) * inv * inv * inv;
        let g3 = -T::lit(24.0) * u * (T::one() + u * u) * inv * inv * inv * inv;
        [e, e * g1 / w, e * (g2 + g1 * g1) / (w * w), e * (g3 + T::lit(3.0) * g1 * g2 + g1 * g1 * g1) / (w * w * w)]
    }

    fn value(&self, x: T) -> T {
        let u = self.offset(x) / self.half_width;
        if u.abs() >= T::one() {
            return T::zero();
        }
        let inv = ((T::one() - u) * (T::one() + u)).recip();
        if inv > T::lit(BUMP_CUTOFF) {
            T::zero()
        } else {
            self.height * (T::one() - inv).exp()
        }
    }

    /// `φ(p + delta) - φ(p)` without cancellation for small `delta`.
    fn difference(&self, p: T, delta: T) -> T {
        let w = self.half_width;
        let d0 = self.offset(p);
        let raw = d0 + delta;
        let d1 = raw - (raw + T::lit(0.5)).floor();
        let wrapped = d1 != raw;
        let u0 = d0 / w;
        let u1 = d1 / w;
        let inside = |u: T| u.abs() < T::one() && ((T::one() - u) * (T::one() + u)).recip() <= T::lit(BUMP_CUTOFF);
        match (inside(u0), inside(u1)) {
            (false, false) => T::zero(),
            (true, false) => -self.value(p),
            (false, true) => self.value(p + delta),
            (true, true) => {
                let q0 = (T::one() - u0) * (T::one() + u0);
                let q1 = (T::one() - u1) * (T::one() + u1);
                let du = if wrapped { u0 - u1 } else { -delta / w };
                // g(u1) - g(u0) with g(u) = -u²/(1-u²)
                let dg = du * (u0 + u1) / (q0 * q1);
                let phi0 = self.height * (T::one() - q0.recip()).exp();
                if dg > T::one() {
                    self.value(p + delta) - phi0
                } else {
                    phi0 * dg.exp_m1()
                }
            }
        }
    }
}

/// Real function of period 1: a truncated Fourier series plus optional
/// compactly supported bumps.
///
/// `cos[k]` multiplies `cos(2πkx)` (k = 0..=K) and `sin[k-1]` multiplies
/// `sin(2πkx)` (k = 1..=K).
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction<T> {
    cos: Vec<T>,
    sin: Vec<T>,
    bumps: Vec<Bump<T>>,
}

impl<T: Real> Default for PeriodicFunction<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> PeriodicFunction<T> {
    pub fn new(cos: Vec<T>, sin: Vec<T>) -> Result<Self, MetricError> {
        Self::with_bumps(cos, sin, Vec::new())
    }

    pub fn with_bumps(mut cos: Vec<T>, mut sin: Vec<T>, bumps: Vec<Bump<T>>) -> Result<Self, MetricError> {
        if let Some(i) = cos.iter().position(|c| !c.is_finite()) {
            return Err(MetricError::NonFinite(format!("cos[{i}]")));
        }
        if let Some(i) = sin.iter().position(|c| !c.is_finite()) {
            return Err(MetricError::NonFinite(format!("sin[{i}]")));
        }
        for (i, b) in bumps.iter().enumerate() {
            b.validate(i)?;
        }
        if cos.is_empty() {
            cos.push(T::zero());
        }
        while cos.len() > 1 && *cos.last().unwrap() == T::zero() {
            cos.pop();
        }
        while sin.last() == Some(&T::zero()) {
            sin.pop();
        }
        let k = (cos.len() - 1).max(sin.len());
        cos.resize(k + 1, T::zero());
        sin.resize(k, T::zero());
        Ok(Self { cos, sin, bumps })
    }

    pub fn zero() -> Self {
        Self { cos: vec![T::zero()], sin: Vec::new(), bumps: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self { cos: vec![c], sin: Vec::new(), bumps: Vec::new() }
    }

    /// `amplitude · cos(2πkx)`.
    pub fn cosine(k: usize, amplitude: T) -> Self {
        let mut cos = vec![T::zero(); k + 1];
        cos[k] += amplitude;
        Self::new(cos, Vec::new()).expect("finite amplitude")
    }

    /// `amplitude · sin(2πkx)`, `k ≥ 1`.
    pub fn sine(k: usize, amplitude: T) -> Self {
        assert!(k >= 1, "sine mode needs k >= 1");
        let mut sin = vec![T::zero(); k];
        sin[k - 1] = amplitude;
        Self::new(Vec::new(), sin).expect("finite amplitude")
    }

    pub fn bump(b: Bump<T>) -> Result<Self, MetricError> {
        Self::with_bumps(Vec::new(), Vec::new(), vec![b])
    }

    pub fn cos_coeffs(&self) -> &[T] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[T] {
        &self.sin
    }

    pub fn bumps(&self) -> &[Bump<T>] {
        &self.bumps
    }

    /// Highest Fourier index present.
    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn has_bumps(&self) -> bool {
        self.bumps.iter().any(|b| b.height != T::zero())
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0 && !self.has_bumps()
    }

    /// Mean over one period.
    pub fn mean(&self) -> T {
        self.cos[0] + self.bumps.iter().map(|b| b.mass()).sum::<T>()
    }

    pub fn eval(&self, x: T) -> T {
        let r = x.frac();
        let mut v = self.cos[0];
        let k_max = self.degree();
        if k_max > 0 {
            let (s1, c1) = (two_pi::<T>() * r).sin_cos();
            let (mut c, mut s) = (c1, s1);
            for k in 1..=k_max {
                v += self.cos[k] * c + self.sin[k - 1] * s;
                (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            }
        }
        for b in &self.bumps {
            v += b.value(r);
        }
        v
    }

    pub fn derivative(&self, x: T) -> T {
        self.jet(x)[1]
    }

    /// Value and derivatives of order 1..=3.
    pub fn jet(&self, x: T) -> [T; 4] {
        let r = x.frac();
        let mut j = [self.cos[0], T::zero(), T::zero(), T::zero()];
        let k_max = self.degree();
        if k_max > 0 {
            let tau = two_pi::<T>();
            let (s1, c1) = (tau * r).sin_cos();
            let (mut c, mut s) = (c1, s1);
            for k in 1..=k_max {
                let (a, b) = (self.cos[k], self.sin[k - 1]);
                let w = tau * T::from_count(k);
                let even = a * c + b * s;
                let odd = b * c - a * s;
                j[0] += even;
                j[1] += w * odd;
                j[2] -= w * w * even;
                j[3] -= w * w * w * odd;
                (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            }
        }
        for b in &self.bumps {
            let bj = b.jet(r);
            for i in 0..4 {
                j[i] += bj[i];
            }
        }
        j
    }

    /// `f(p + delta) - f(p)`, accurate to working precision relative to the
    /// result even when `delta` is tiny.
    pub fn difference(&self, p: T, delta: T) -> T {
        let r = p.frac();
        let mut d = T::zero();
        let k_max = self.degree();
        if k_max > 0 {
            let pi = T::PI();
            // cos(θ+2φ)-cos θ = -2 sin(θ+φ) sin φ,  sin(θ+2φ)-sin θ = 2 cos(θ+φ) sin φ
            let (sa, ca) = (pi * (r + r + delta)).sin_cos();
            let (sb, cb) = (pi * delta).sin_cos();
            let (mut c_a, mut s_a) = (ca, sa);
            let (mut c_b, mut s_b) = (cb, sb);
            for k in 1..=k_max {
                d += T::lit(2.0) * s_b * (self.sin[k - 1] * c_a - self.cos[k] * s_a);
                (c_a, s_a) = (c_a * ca - s_a * sa, s_a * ca + c_a * sa);
                (c_b, s_b) = (c_b * cb - s_b * sb, s_b * cb + c_b * sb);
            }
        }
        for b in &self.bumps {
            d += b.difference(r, delta);
        }
        d
    }

    /// Upper bound on `sup |f⁽ʳ⁾|`, r ≤ 5.
    pub fn derivative_bound(&self, order: usize) -> T {
        assert!(order < BUMP_DERIVATIVE_BOUNDS.len());
        let mut s = if order == 0 { self.cos[0].abs() } else { T::zero() };
        for k in 1..=self.degree() {
            let w = (two_pi::<T>() * T::from_count(k)).powi(order as i32);
            s += w * (self.cos[k].abs() + self.sin[k - 1].abs());
        }
        for b in &self.bumps {
            s += b.height.abs() * T::lit(BUMP_DERIVATIVE_BOUNDS[order]) / b.half_width.powi(order as i32);
        }
        s
    }

    /// Interior points where the function is only C∞ (bump support edges), in `[0, 1)`.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut v: Vec<T> = self
            .bumps
            .iter()
            .flat_map(|b| {
                let (a, c) = b.support();
                [a, c.frac()]
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// Smallest spacing any sampling grid should resolve.
    pub fn feature_scale(&self) -> T {
        let mut s = if self.degree() > 0 { T::from_count(self.degree()).recip() } else { T::one() };
        for b in &self.bumps {
            s = s.min(b.half_width);
        }
        s
    }

    /// `s · f`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            cos: self.cos.iter().map(|&c| c * s).collect(),
            sin: self.sin.iter().map(|&c| c * s).collect(),
            bumps: self.bumps.iter().map(|b| Bump { height: b.height * s, ..*b }).collect(),
        }
    }

    /// `f + c`.
    pub fn offset_by(&self, c: T) -> Self {
        let mut out = self.clone();
        out.cos[0] += c;
        out
    }

    /// `x ↦ f(x - c)`.
    pub fn shifted(&self, c: T) -> Self {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        for k in 1..=self.degree() {
            let (st, ct) = (two_pi::<T>() * T::from_count(k) * c).sin_cos();
            let (a, b) = (self.cos[k], self.sin[k - 1]);
            cos[k] = a * ct - b * st;
            sin[k - 1] = a * st + b * ct;
        }
        let bumps = self.bumps.iter().map(|b| Bump { center: (b.center + c).frac(), ..*b }).collect();
        Self { cos, sin, bumps }
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.degree().max(other.degree());
        let mut cos = vec![T::zero(); k + 1];
        let mut sin = vec![T::zero(); k];
        for (i, c) in self.cos.iter().enumerate() {
            cos[i] += *c;
        }
        for (i, c) in other.cos.iter().enumerate() {
            cos[i] += *c;
        }
        for (i, c) in self.sin.iter().enumerate() {
            sin[i] += *c;
        }
        for (i, c) in other.sin.iter().enumerate() {
            sin[i] += *c;
        }
        let mut bumps = self.bumps.clone();
        bumps.extend_from_slice(&other.bumps);
        Self::with_bumps(cos, sin, bumps).expect("sum of valid functions")
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> PeriodicFunction<U> {
        let c = |x: T| U::lit(x.as_f64());
        PeriodicFunction {
            cos: self.cos.iter().map(|&x| c(x)).collect(),
            sin: self.sin.iter().map(|&x| c(x)).collect(),
            bumps: self
                .bumps
                .iter()
                .map(|b| Bump { center: c(b.center), half_width: c(b.half_width), height: c(b.height) })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PeriodicFunction<f64> {
        PeriodicFunction::with_bumps(
            vec![0.01, 0.2, -0.03, 0.0, 0.01],
            vec![0.1, 0.0, 0.02],
            vec![Bump::new(0.3, 0.08, 0.05)],
        )
        .unwrap()
    }

    #[test]
    fn direct_evaluation_matches_series() {
        let f = PeriodicFunction::new(vec![0.0, 0.2], vec![0.1]).unwrap();
        for &x in &[0.0, 0.13, 0.5, 0.77] {
            let want = 0.2 * (2.0 * std::f64::consts::PI * x).cos() + 0.1 * (2.0 * std::f64::consts::PI * x).sin();
            assert!((f.eval(x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let f = PeriodicFunction::new(vec![1.0, 0.0, 0.0], vec![0.0]).unwrap();
        assert!(f.is_constant());
        assert_eq!(f.degree(), 0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn jet_matches_finite_differences() {
        let f = sample();
        let h = 1e-6;
        for i in 0..50 {
            let x = i as f64 / 50.0 + 0.003;
            let j = f.jet(x);
            let fd = |k: usize| (f.jet(x + h)[k] - f.jet(x - h)[k]) / (2.0 * h);
            for k in 1..4 {
                let tol = 1e-7 * (1.0 + j[k].abs())
                    + h * h * f.derivative_bound(k + 2) / 6.0
                    + 1e-15 * f.derivative_bound(k - 1) / h;
                assert!((j[k] - fd(k - 1)).abs() < tol, "order {k} at {x}: {} vs {}", j[k], fd(k - 1));
            }
        }
    }

    #[test]
    fn difference_is_accurate_for_tiny_steps() {
        let f = sample();
        for &p in &[0.05, 0.27, 0.31, 0.62] {
            let j = f.jet(p);
            for &d in &[1e-5, 1e-7, 1e-11, -1e-9] {
                let got = f.difference(p, d);
                let want = d * (j[1] + d * (0.5 * j[2] + d * j[3] / 6.0));
                let err = f.derivative_bound(4) * d.powi(4) / 24.0;
                assert!((got - want).abs() <= 1e-13 * want.abs() + err, "p={p} d={d} got={got} want={want}");
            }
            for &d in &[1e-3, 0.4] {
                let big = f.difference(p, d);
                assert!((big - (f.eval(p + d) - f.eval(p))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shift_and_mean() {
        let f = sample();
        let g = f.shifted(0.21);
        for i in 0..20 {
            let x = i as f64 * 0.05;
            assert!((g.eval(x) - f.eval(x - 0.21)).abs() < 1e-14);
        }
        let n = 4096;
        let trap: f64 = (0..n).map(|i| f.eval(i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((trap - f.mean()).abs() < 1e-12);
    }

    #[test]
    fn derivative_bounds_hold() {
        let f = sample();
        for order in 0..4 {
            let b = f.derivative_bound(order);
            for i in 0..2000 {
                let x = i as f64 / 2000.0;
                assert!(f.jet(x)[order].abs() <= b);
            }
        }
    }

    #[test]
    fn invalid_bump_rejected() {
        assert!(PeriodicFunction::bump(Bump::new(0.1, 0.6, 1.0)).is_err());
        assert!(PeriodicFunction::<f64>::new(vec![f64::NAN], vec![]).is_err());
    }
}
