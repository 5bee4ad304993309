//! Periodic densities on the unit-square torus.

mod bivariate;
mod critical;
mod periodic;
pub mod random;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bivariate::{BivariateFunction, Jet2, Mode, MAX_MODE};
pub use critical::{critical_points, extrema, CriticalKind, CriticalSet, Extrema};
pub use periodic::{Bump, PeriodicFunction};

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("coefficient {0} is not finite")]
    NonFinite(String),
    #[error("bump {index}: {reason}")]
    InvalidBump { index: usize, reason: String },
    #[error("mode ({j}, {k}) appears more than once")]
    DuplicateMode { j: usize, k: usize },
    #[error("mode ({j}, {k}) exceeds the maximum index {max}")]
    ModeTooHigh { j: usize, k: usize, max: usize },
    #[error("bumps have no finite Fourier expansion")]
    NotBandLimited,
    #[error("density is not certified positive: sampled minimum {min:.6e}, safety margin {margin:.6e}")]
    NonPositive { min: f64, margin: f64 },
}

/// Anything that provides a smooth positive conformal factor `ρ` on the torus.
pub trait Density<T: Real>: Sync {
    fn rho(&self, x: [T; 2]) -> T;

    /// `ρ` and `∇ρ`.
    fn rho_grad(&self, x: [T; 2]) -> (T, [T; 2]);

    /// `ρ`, `∇ρ` and the Hessian of `ρ`.
    fn rho_jet(&self, x: [T; 2]) -> Jet2<T>;
}

/// Density `1 + f1(x1) + f2(x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleMetric<T> {
    f1: PeriodicFunction<T>,
    f2: PeriodicFunction<T>,
    ext1: Extrema<T>,
    ext2: Extrema<T>,
}

impl<T: Real> LiouvilleMetric<T> {
    pub fn new(f1: PeriodicFunction<T>, f2: PeriodicFunction<T>) -> Result<Self, MetricError> {
        let ext1 = extrema(&f1);
        let ext2 = extrema(&f2);
        let min = T::one() + ext1.min + ext2.min;
        if !(min > T::zero()) {
            return Err(MetricError::NonPositive { min: min.as_f64(), margin: 0.0 });
        }
        Ok(Self { f1, f2, ext1, ext2 })
    }

    pub fn flat() -> Self {
        Self::new(PeriodicFunction::zero(), PeriodicFunction::zero()).expect("flat metric is valid")
    }

    pub fn f1(&self) -> &PeriodicFunction<T> {
        &self.f1
    }

    pub fn f2(&self) -> &PeriodicFunction<T> {
        &self.f2
    }

    pub fn extrema1(&self) -> &Extrema<T> {
        &self.ext1
    }

    pub fn extrema2(&self) -> &Extrema<T> {
        &self.ext2
    }

    pub fn min_density(&self) -> T {
        T::one() + self.ext1.min + self.ext2.min
    }

    pub fn max_density(&self) -> T {
        T::one() + self.ext1.max + self.ext2.max
    }

    pub fn is_flat(&self) -> bool {
        self.f1.is_constant() && self.f2.is_constant()
    }

    pub fn area(&self) -> T {
        T::one() + self.f1.mean() + self.f2.mean()
    }

    /// The metric with the roles of x1 and x2 exchanged.
    pub fn swapped(&self) -> Self {
        Self { f1: self.f2.clone(), f2: self.f1.clone(), ext1: self.ext2.clone(), ext2: self.ext1.clone() }
    }

    /// Density multiplied by `s2 > 0`.
    pub fn rescaled(&self, s2: T) -> Result<Self, MetricError> {
        Self::new(self.f1.scaled(s2).offset_by(s2 - T::one()), self.f2.scaled(s2))
    }

    /// `V = 1 + f1 + f2` as a bivariate series (no bumps allowed).
    pub fn as_bivariate(&self) -> Result<BivariateFunction<T>, MetricError> {
        BivariateFunction::separable(&self.f1.offset_by(T::one()), &self.f2)
    }

    pub fn fingerprint(&self) -> String {
        ConformalMetric::from(self.clone()).fingerprint()
    }

    pub fn cast<U: Real>(&self) -> Result<LiouvilleMetric<U>, MetricError> {
        LiouvilleMetric::new(self.f1.cast(), self.f2.cast())
    }
}

impl<T: Real> Density<T> for LiouvilleMetric<T> {
    #[inline]
    fn rho(&self, x: [T; 2]) -> T {
        T::one() + self.f1.eval(x[0]) + self.f2.eval(x[1])
    }

    #[inline]
    fn rho_grad(&self, x: [T; 2]) -> (T, [T; 2]) {
        let a = self.f1.jet(x[0]);
        let b = self.f2.jet(x[1]);
        (T::one() + a[0] + b[0], [a[1], b[1]])
    }

    fn rho_jet(&self, x: [T; 2]) -> Jet2<T> {
        let a = self.f1.jet(x[0]);
        let b = self.f2.jet(x[1]);
        Jet2 { value: T::one() + a[0] + b[0], grad: [a[1], b[1]], hess: [[a[2], T::zero()], [T::zero(), b[2]]] }
    }
}

/// Density `1 + f1(x1) + f2(x2) + ε·U(x1, x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalMetric<T> {
    base: LiouvilleMetric<T>,
    u: BivariateFunction<T>,
    epsilon: T,
}

impl<T: Real> From<LiouvilleMetric<T>> for ConformalMetric<T> {
    fn from(base: LiouvilleMetric<T>) -> Self {
        Self { base, u: BivariateFunction::zero(), epsilon: T::zero() }
    }
}

impl<T: Real> ConformalMetric<T> {
    /// Validates positivity by grid sampling plus a Lipschitz safety margin.
    pub fn new(base: LiouvilleMetric<T>, u: BivariateFunction<T>, epsilon: T) -> Result<Self, MetricError> {
        if !epsilon.is_finite() {
            return Err(MetricError::NonFinite("epsilon".into()));
        }
        let m = Self { base, u, epsilon };
        if m.is_liouville() {
            return Ok(m);
        }
        let lip = m.lipschitz_bounds();
        for n in [256usize, 1024] {
            let h = T::from_count(n).recip();
            let margin = (lip[0] + lip[1]) * h * T::lit(0.5);
            let min = m.grid_min(n);
            if min - margin > T::zero() {
                return Ok(m);
            }
            if !(min > T::zero()) || n == 1024 {
                return Err(MetricError::NonPositive { min: min.as_f64(), margin: margin.as_f64() });
            }
        }
        unreachable!()
    }

    fn grid_min(&self, n: usize) -> T {
        let h = T::from_count(n).recip();
        let mut min = T::infinity();
        for i in 0..n {
            for j in 0..n {
                let r = self.rho([T::from_count(i) * h, T::from_count(j) * h]);
                min = min.min(r);
            }
        }
        min
    }

    fn lipschitz_bounds(&self) -> [T; 2] {
        let lu = self.u.lipschitz_bounds();
        let e = self.epsilon.abs();
        [self.base.f1.derivative_bound(1) + e * lu[0], self.base.f2.derivative_bound(1) + e * lu[1]]
    }

    pub fn base(&self) -> &LiouvilleMetric<T> {
        &self.base
    }

    pub fn perturbation(&self) -> &BivariateFunction<T> {
        &self.u
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// True when the perturbation does not contribute.
    pub fn is_liouville(&self) -> bool {
        self.epsilon == T::zero() || self.u.is_zero()
    }

    /// Same base and perturbation at another deformation parameter.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self, MetricError> {
        Self::new(self.base.clone(), self.u.clone(), epsilon)
    }

    pub fn area(&self) -> T {
        self.base.area() + self.epsilon * self.u.mean()
    }

    /// Lower bound on the density over the torus.
    pub fn density_lower_bound(&self) -> T {
        self.base.min_density() - self.epsilon.abs() * self.u.abs_bound()
    }

    pub fn swapped(&self) -> Self {
        Self { base: self.base.swapped(), u: self.u.transposed(), epsilon: self.epsilon }
    }

    /// Density multiplied by `s2 > 0`.
    pub fn rescaled(&self, s2: T) -> Result<Self, MetricError> {
        Self::new(self.base.rescaled(s2)?, self.u.scaled(s2), self.epsilon)
    }

    /// 16 hex digits of a SHA-256 digest over the canonical coefficient bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |tag: &[u8], values: &mut dyn Iterator<Item = T>| {
            h.update(tag);
            for v in values {
                h.update(v.as_f64().to_le_bytes());
            }
        };
        for (tag, f) in [(b"f1", &self.base.f1), (b"f2", &self.base.f2)] {
            put(tag, &mut std::iter::empty());
            put(b"cos", &mut f.cos_coeffs().iter().copied());
            put(b"sin", &mut f.sin_coeffs().iter().copied());
            put(b"bump", &mut f.bumps().iter().flat_map(|b| [b.center, b.half_width, b.height]));
        }
        if !self.is_liouville() {
            put(b"eps", &mut std::iter::once(self.epsilon));
            for m in self.u.modes() {
                put(b"mode", &mut [T::from_count(m.j), T::from_count(m.k), m.cc, m.cs, m.sc, m.ss].into_iter());
            }
        }
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl<T: Real> Density<T> for ConformalMetric<T> {
    #[inline]
    fn rho(&self, x: [T; 2]) -> T {
        let v = self.base.rho(x);
        if self.is_liouville() {
            v
        } else {
            v + self.epsilon * self.u.eval(x)
        }
    }

    #[inline]
    fn rho_grad(&self, x: [T; 2]) -> (T, [T; 2]) {
        let (v, g) = self.base.rho_grad(x);
        if self.is_liouville() {
            return (v, g);
        }
        let j = self.u.jet(x);
        let e = self.epsilon;
        (v + e * j.value, [g[0] + e * j.grad[0], g[1] + e * j.grad[1]])
    }

    fn rho_jet(&self, x: [T; 2]) -> Jet2<T> {
        let mut b = self.base.rho_jet(x);
        if self.is_liouville() {
            return b;
        }
        let j = self.u.jet(x);
        let e = self.epsilon;
        b.value += e * j.value;
        for i in 0..2 {
            b.grad[i] += e * j.grad[i];
            for k in 0..2 {
                b.hess[i][k] += e * j.hess[i][k];
            }
        }
        b
    }
}
