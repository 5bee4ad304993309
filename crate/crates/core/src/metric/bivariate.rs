use crate::metric::{MetricError, PeriodicFunction};
use crate::scalar::{two_pi, Real};

/// Largest frequency index accepted in either variable.
pub const MAX_MODE: usize = 64;

/// Coefficients of one product mode `(j, k)`:
/// `cc·cos(2πj x1)cos(2πk x2) + cs·cos·sin + sc·sin·cos + ss·sin·sin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T> {
    pub j: usize,
    pub k: usize,
    pub cc: T,
    pub cs: T,
    pub sc: T,
    pub ss: T,
}

impl<T: Real> Mode<T> {
    pub fn new(j: usize, k: usize, cc: T, cs: T, sc: T, ss: T) -> Self {
        Self { j, k, cc, cs, sc, ss }
    }

    fn is_zero(&self) -> bool {
        let z = T::zero();
        // sin(0) = 0, so some coefficients never contribute.
        let cs = if self.k == 0 { z } else { self.cs };
        let sc = if self.j == 0 { z } else { self.sc };
        let ss = if self.j == 0 || self.k == 0 { z } else { self.ss };
        self.cc == z && cs == z && sc == z && ss == z
    }
}

/// Doubly periodic function given by finitely many product modes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BivariateFunction<T> {
    modes: Vec<Mode<T>>,
    max_j: usize,
    max_k: usize,
}

/// Value, gradient and Hessian at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: [[T; 2]; 2],
}

struct Trig<T> {
    c: [T; MAX_MODE + 1],
    s: [T; MAX_MODE + 1],
}

impl<T: Real> Trig<T> {
    fn new(x: T, n: usize) -> Self {
        let mut c = [T::zero(); MAX_MODE + 1];
        let mut s = [T::zero(); MAX_MODE + 1];
        c[0] = T::one();
        if n > 0 {
            let (s1, c1) = (two_pi::<T>() * x.frac()).sin_cos();
            for i in 1..=n {
                let (cp, sp) = (c[i - 1], s[i - 1]);
                c[i] = cp * c1 - sp * s1;
                s[i] = sp * c1 + cp * s1;
            }
        }
        Self { c, s }
    }

    /// Value, first and second derivative of `cos(2πix)` and `sin(2πix)`.
    #[inline]
    fn jets(&self, i: usize) -> ([T; 3], [T; 3]) {
        let w = two_pi::<T>() * T::from_count(i);
        let (c, s) = (self.c[i], self.s[i]);
        ([c, -w * s, -w * w * c], [s, w * c, -w * w * s])
    }
}

impl<T: Real> BivariateFunction<T> {
    pub fn zero() -> Self {
        Self { modes: Vec::new(), max_j: 0, max_k: 0 }
    }

    pub fn new(modes: Vec<Mode<T>>) -> Result<Self, MetricError> {
        let mut out: Vec<Mode<T>> = Vec::with_capacity(modes.len());
        for m in modes {
            for (name, v) in [("cc", m.cc), ("cs", m.cs), ("sc", m.sc), ("ss", m.ss)] {
                if !v.is_finite() {
                    return Err(MetricError::NonFinite(format!("mode ({}, {}).{name}", m.j, m.k)));
                }
            }
            if m.j > MAX_MODE || m.k > MAX_MODE {
                return Err(MetricError::ModeTooHigh { j: m.j, k: m.k, max: MAX_MODE });
            }
            if out.iter().any(|o| o.j == m.j && o.k == m.k) {
                return Err(MetricError::DuplicateMode { j: m.j, k: m.k });
            }
            out.push(m);
        }
        out.retain(|m| !m.is_zero());
        out.sort_by_key(|m| (m.j, m.k));
        let max_j = out.iter().map(|m| m.j).max().unwrap_or(0);
        let max_k = out.iter().map(|m| m.k).max().unwrap_or(0);
        Ok(Self { modes: out, max_j, max_k })
    }

    /// `u1(x1) + u2(x2)` for band-limited `u1`, `u2`.
    pub fn separable(u1: &PeriodicFunction<T>, u2: &PeriodicFunction<T>) -> Result<Self, MetricError> {
        if u1.has_bumps() || u2.has_bumps() {
            return Err(MetricError::NotBandLimited);
        }
        let mut modes = vec![Mode::new(0, 0, u1.cos_coeffs()[0] + u2.cos_coeffs()[0], T::zero(), T::zero(), T::zero())];
        for j in 1..=u1.degree() {
            modes.push(Mode::new(j, 0, u1.cos_coeffs()[j], T::zero(), u1.sin_coeffs()[j - 1], T::zero()));
        }
        for k in 1..=u2.degree() {
            modes.push(Mode::new(0, k, u2.cos_coeffs()[k], u2.sin_coeffs()[k - 1], T::zero(), T::zero()));
        }
        Self::new(modes)
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest frequency in x1 and in x2.
    pub fn degree(&self) -> (usize, usize) {
        (self.max_j, self.max_k)
    }

    pub fn mean(&self) -> T {
        self.modes.iter().find(|m| m.j == 0 && m.k == 0).map(|m| m.cc).unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        if self.modes.is_empty() {
            return T::zero();
        }
        let t1 = Trig::new(x[0], self.max_j);
        let t2 = Trig::new(x[1], self.max_k);
        let mut v = T::zero();
        for m in &self.modes {
            let (c1, s1, c2, s2) = (t1.c[m.j], t1.s[m.j], t2.c[m.k], t2.s[m.k]);
            v += m.cc * c1 * c2 + m.cs * c1 * s2 + m.sc * s1 * c2 + m.ss * s1 * s2;
        }
        v
    }

    pub fn jet(&self, x: [T; 2]) -> Jet2<T> {
        let mut out = Jet2 { value: T::zero(), grad: [T::zero(); 2], hess: [[T::zero(); 2]; 2] };
        if self.modes.is_empty() {
            return out;
        }
        let t1 = Trig::new(x[0], self.max_j);
        let t2 = Trig::new(x[1], self.max_k);
        for m in &self.modes {
            let (cj, sj) = t1.jets(m.j);
            let (ck, sk) = t2.jets(m.k);
            for (coef, a, b) in [(m.cc, &cj, &ck), (m.cs, &cj, &sk), (m.sc, &sj, &ck), (m.ss, &sj, &sk)] {
                if coef == T::zero() {
                    continue;
                }
                out.value += coef * a[0] * b[0];
                out.grad[0] += coef * a[1] * b[0];
                out.grad[1] += coef * a[0] * b[1];
                out.hess[0][0] += coef * a[2] * b[0];
                out.hess[0][1] += coef * a[1] * b[1];
                out.hess[1][1] += coef * a[0] * b[2];
            }
        }
        out.hess[1][0] = out.hess[0][1];
        out
    }

    /// Bounds on `sup |∂U/∂x1|` and `sup |∂U/∂x2|`.
    pub fn lipschitz_bounds(&self) -> [T; 2] {
        let mut b = [T::zero(); 2];
        for m in &self.modes {
            let amp = m.cc.abs() + m.cs.abs() + m.sc.abs() + m.ss.abs();
            b[0] += two_pi::<T>() * T::from_count(m.j) * amp;
            b[1] += two_pi::<T>() * T::from_count(m.k) * amp;
        }
        b
    }

    pub fn abs_bound(&self) -> T {
        self.modes.iter().map(|m| m.cc.abs() + m.cs.abs() + m.sc.abs() + m.ss.abs()).sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        let modes =
            self.modes.iter().map(|m| Mode { cc: m.cc * s, cs: m.cs * s, sc: m.sc * s, ss: m.ss * s, ..*m }).collect();
        Self::new(modes).expect("scaling keeps coefficients finite")
    }

    /// `(x1, x2) ↦ U(x2, x1)`.
    pub fn transposed(&self) -> Self {
        let modes =
            self.modes.iter().map(|m| Mode { j: m.k, k: m.j, cc: m.cc, cs: m.sc, sc: m.cs, ss: m.ss }).collect();
        Self::new(modes).expect("transpose keeps coefficients valid")
    }

    pub fn cast<U: Real>(&self) -> BivariateFunction<U> {
        let c = |x: T| U::lit(x.as_f64());
        BivariateFunction {
            modes: self
                .modes
                .iter()
                .map(|m| Mode { j: m.j, k: m.k, cc: c(m.cc), cs: c(m.cs), sc: c(m.sc), ss: c(m.ss) })
                .collect(),
            max_j: self.max_j,
            max_k: self.max_k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_mode_evaluation() {
        let u = BivariateFunction::new(vec![Mode::<f64>::new(1, 2, 0.3, 0.0, 0.0, -0.2)]).unwrap();
        let tau = std::f64::consts::TAU;
        let x = [0.17, 0.61];
        let want =
            0.3 * (tau * x[0]).cos() * (2.0 * tau * x[1]).cos() - 0.2 * (tau * x[0]).sin() * (2.0 * tau * x[1]).sin();
        assert!((u.eval(x) - want).abs() < 1e-15);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let u = BivariateFunction::new(vec![
            Mode::<f64>::new(0, 0, 0.1, 0.0, 0.0, 0.0),
            Mode::new(1, 0, 0.2, 0.0, 0.05, 0.0),
            Mode::new(2, 3, 0.01, -0.02, 0.03, 0.04),
        ])
        .unwrap();
        let h = 1e-5;
        for i in 0..20 {
            let x = [0.05 * i as f64, 0.37 + 0.031 * i as f64];
            let j = u.jet(x);
            let d1 = (u.eval([x[0] + h, x[1]]) - u.eval([x[0] - h, x[1]])) / (2.0 * h);
            let d2 = (u.eval([x[0], x[1] + h]) - u.eval([x[0], x[1] - h])) / (2.0 * h);
            assert!((j.grad[0] - d1).abs() < 1e-8);
            assert!((j.grad[1] - d2).abs() < 1e-8);
            let h12 = (u.jet([x[0], x[1] + h]).grad[0] - u.jet([x[0], x[1] - h]).grad[0]) / (2.0 * h);
            assert!((j.hess[0][1] - h12).abs() < 1e-6);
        }
        assert_eq!(u.mean(), 0.1);
    }

    #[test]
    fn duplicate_modes_rejected() {
        let m = Mode::<f64>::new(1, 1, 1.0, 0.0, 0.0, 0.0);
        assert!(BivariateFunction::new(vec![m, m]).is_err());
    }

    #[test]
    fn transpose_swaps_arguments() {
        let u = BivariateFunction::new(vec![Mode::<f64>::new(1, 2, 0.3, 0.1, -0.4, 0.2)]).unwrap();
        let t = u.transposed();
        assert!((u.eval([0.2, 0.7]) - t.eval([0.7, 0.2])).abs() < 1e-15);
    }
}
