//! Fourier coefficients `ρ̂(q)` of a conformal density,
//! `ρ(x) = Σ_q ρ̂(q) e^{2πi q·x}`.

use std::collections::BTreeMap;

use liouville_core::metric::{Bump, ConformalMetric, PeriodicFunction};
use num_complex::Complex64;

use crate::SpectralError;

/// Base number of intervals of the trapezoid rule for the bump transform; the
/// profile is flat to all orders at `u = ±1`, so the rule converges faster
/// than any power once the step resolves the oscillation.
const BUMP_PANELS: usize = 4096;

/// `∫_{-1}^{1} exp(1 - 1/(1-u²)) cos(ωu) du`.
fn bump_transform(omega: f64) -> f64 {
    // Aliasing enters at the transform's value near πP − ω.
    let panels = BUMP_PANELS + 2 * omega.abs().ceil() as usize;
    let h = 2.0 / panels as f64;
    let mut s = 0.0;
    for i in 1..panels {
        let u = -1.0 + h * i as f64;
        let d = 1.0 - u * u;
        let v = 1.0 - 1.0 / d;
        if v > -700.0 {
            s += v.exp() * (omega * u).cos();
        }
    }
    s * h
}

/// Coefficient of `e^{2πikx}` for one periodized bump.
fn bump_coefficient(b: &Bump<f64>, k: i64) -> Complex64 {
    let w = b.half_width;
    let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 * b.center);
    phase * (b.height * w * bump_transform(2.0 * std::f64::consts::PI * k as f64 * w))
}

/// Fourier coefficients `c_k`, `|k| ≤ limit`, of a periodic function, and the
/// summed magnitude of the discarded bump tail (estimated out to `4·limit`).
fn periodic_coefficients(f: &PeriodicFunction<f64>, limit: usize) -> (Vec<Complex64>, f64) {
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * limit + 1];
    let at = |k: i64| (k + limit as i64) as usize;
    c[at(0)] += f.cos_coeffs()[0];
    for k in 1..=f.degree().min(limit) {
        let (a, b) = (f.cos_coeffs()[k], f.sin_coeffs()[k - 1]);
        c[at(k as i64)] += Complex64::new(0.5 * a, -0.5 * b);
        c[at(-(k as i64))] += Complex64::new(0.5 * a, 0.5 * b);
    }
    let mut tail = 0.0;
    for b in f.bumps() {
        for k in -(limit as i64)..=limit as i64 {
            c[at(k)] += bump_coefficient(b, k);
        }
        if b.height != 0.0 {
            for k in limit as i64 + 1..=4 * limit.max(1) as i64 {
                tail += 2.0 * bump_coefficient(b, k).norm();
            }
        }
    }
    (c, tail)
}

/// Smallest `K ≤ cap` with `Σ_{|k|>K} |c_k| ≤ tolerance`, or `None`.
fn bump_bandwidth(f: &PeriodicFunction<f64>, cap: usize, tolerance: f64) -> Option<usize> {
    if !f.has_bumps() {
        return Some(f.degree());
    }
    let reach = 4 * cap.max(8);
    let mags: Vec<f64> =
        (0..=reach as i64).map(|k| f.bumps().iter().map(|b| bump_coefficient(b, k).norm()).sum::<f64>()).collect();
    let mut tail = 0.0;
    let mut best = None;
    for k in (0..reach).rev() {
        tail += 2.0 * mags[k + 1];
        if tail > tolerance {
            break;
        }
        best = Some(k);
    }
    best.map(|k| k.max(f.degree())).filter(|&k| k <= cap)
}

#[derive(Clone, Debug)]
pub struct DensityCoefficients {
    /// `ρ̂(q)` for `|q1|, |q2| ≤ bandwidth`, row-major in `q1`.
    table: Vec<Complex64>,
    bandwidth: usize,
    /// Nonzero `q` (with `ρ̂(q) ≠ 0`), `q ≠ 0`.
    support: Vec<(i64, i64)>,
    /// Summed magnitude of truncated bump coefficients.
    pub truncation: f64,
    pub mean: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
}

impl DensityCoefficients {
    /// Coefficients of `1 + f1 + f2 + εU`. Bumps are truncated at the
    /// smallest bandwidth whose discarded tail is below `bump_tolerance`,
    /// which must not exceed `cap`.
    pub fn new(metric: &ConformalMetric<f64>, cap: usize, bump_tolerance: f64) -> Result<Self, SpectralError> {
        let base = metric.base();
        let too_low = |needed: Option<usize>| SpectralError::ResolutionTooLow { bandwidth: needed, limit: cap };
        let k1 = bump_bandwidth(base.f1(), cap, bump_tolerance).ok_or_else(|| too_low(None))?;
        let k2 = bump_bandwidth(base.f2(), cap, bump_tolerance).ok_or_else(|| too_low(None))?;
        let (uj, uk) = if metric.is_liouville() { (0, 0) } else { metric.perturbation().degree() };
        let bandwidth = k1.max(k2).max(uj).max(uk);
        if bandwidth > cap {
            return Err(too_low(Some(bandwidth)));
        }
        let side = 2 * bandwidth + 1;
        let mut map: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
        let (c1, t1) = periodic_coefficients(base.f1(), bandwidth);
        let (c2, t2) = periodic_coefficients(base.f2(), bandwidth);
        let b = bandwidth as i64;
        for q in -b..=b {
            *map.entry((q, 0)).or_default() += c1[(q + b) as usize];
            *map.entry((0, q)).or_default() += c2[(q + b) as usize];
        }
        *map.entry((0, 0)).or_default() += 1.0;
        if !metric.is_liouville() {
            let e = metric.epsilon();
            for m in metric.perturbation().modes() {
                for s1 in [1i64, -1] {
                    for s2 in [1i64, -1] {
                        let (f1, f2) = (s1 as f64, s2 as f64);
                        // cos → 1/2, sin → -i·s/2 for the e^{±} components.
                        let c = Complex64::new(m.cc - f1 * f2 * m.ss, -(f2 * m.cs + f1 * m.sc)) * 0.25;
                        *map.entry((s1 * m.j as i64, s2 * m.k as i64)).or_default() += c * e;
                    }
                }
            }
        }
        let mut table = vec![Complex64::new(0.0, 0.0); side * side];
        let mut support = Vec::new();
        for (&(q1, q2), &c) in &map {
            table[(q1 + b) as usize * side + (q2 + b) as usize] = c;
            if c != Complex64::new(0.0, 0.0) && (q1, q2) != (0, 0) {
                support.push((q1, q2));
            }
        }
        let truncation = t1 + t2;
        let u_bound =
            if metric.is_liouville() { 0.0 } else { metric.epsilon().abs() * metric.perturbation().abs_bound() };
        let upper_bound = base.max_density() + u_bound + truncation;
        let lower_bound = (base.min_density() - u_bound - truncation).max(0.0);
        Ok(Self { table, bandwidth, support, truncation, mean: map[&(0, 0)].re, upper_bound, lower_bound })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn support(&self) -> &[(i64, i64)] {
        &self.support
    }

    #[inline]
    pub fn get(&self, q: (i64, i64)) -> Complex64 {
        let b = self.bandwidth as i64;
        if q.0.abs() > b || q.1.abs() > b {
            return Complex64::new(0.0, 0.0);
        }
        let side = 2 * self.bandwidth + 1;
        self.table[(q.0 + b) as usize * side + (q.1 + b) as usize]
    }

    /// Constant density, when the support is empty.
    pub fn constant(&self) -> Option<f64> {
        self.support.is_empty().then_some(self.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use liouville_core::metric::{BivariateFunction, Density, LiouvilleMetric, Mode};

    fn eval(d: &DensityCoefficients, x: [f64; 2]) -> f64 {
        let b = d.bandwidth as i64;
        let mut v = Complex64::new(0.0, 0.0);
        for q1 in -b..=b {
            for q2 in -b..=b {
                let ph = 2.0 * std::f64::consts::PI * (q1 as f64 * x[0] + q2 as f64 * x[1]);
                v += d.get((q1, q2)) * Complex64::from_polar(1.0, ph);
            }
        }
        assert!(v.im.abs() < 1e-13);
        v.re
    }

    #[test]
    fn coefficients_reproduce_the_density() {
        let base = LiouvilleMetric::new(
            PeriodicFunction::new(vec![0.0, 0.1, 0.02], vec![0.05]).unwrap(),
            PeriodicFunction::new(vec![0.0, 0.0, -0.07], vec![0.0, 0.03]).unwrap(),
        )
        .unwrap();
        let u = BivariateFunction::new(vec![Mode::new(1, 2, 0.3, -0.2, 0.1, 0.4), Mode::new(0, 1, 0.2, 0.1, 0.0, 0.0)])
            .unwrap();
        let m = ConformalMetric::new(base, u, 0.1).unwrap();
        let d = DensityCoefficients::new(&m, 8, 1e-12).unwrap();
        for x in [[0.1, 0.7], [0.33, 0.05], [0.9, 0.45]] {
            assert!((eval(&d, x) - m.rho(x)).abs() < 1e-14);
        }
        assert!((d.mean - m.area()).abs() < 1e-15);
    }

    #[test]
    fn bumps_are_resolved_to_tolerance() {
        let f = PeriodicFunction::bump(Bump::new(0.3, 0.2, 0.4)).unwrap();
        let m = ConformalMetric::from(LiouvilleMetric::new(PeriodicFunction::zero(), f).unwrap());
        let d = DensityCoefficients::new(&m, 64, 1e-4).unwrap();
        assert!(d.truncation <= 1e-4 && d.bandwidth() <= 64);
        for x in [[0.0, 0.3], [0.0, 0.41], [0.0, 0.75]] {
            assert!((eval(&d, x) - m.rho(x)).abs() < 1e-4, "{x:?}");
        }
        // The tail decays like exp(-√(2ω)): 1e-8 needs a few hundred modes.
        assert!(DensityCoefficients::new(&m, 64, 1e-8).is_err());
    }
}
