//! Seeded random metrics for experiments and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::{BivariateFunction, LiouvilleMetric, Mode, PeriodicFunction};
use crate::scalar::Real;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean-zero band-limited function with `|a_k|, |b_k| ≤ amplitude / k²`.
pub fn periodic<T: Real, R: Rng>(rng: &mut R, degree: usize, amplitude: f64) -> PeriodicFunction<T> {
    let mut cos = vec![T::zero(); degree + 1];
    let mut sin = vec![T::zero(); degree];
    for k in 1..=degree {
        let s = amplitude / (k * k) as f64;
        cos[k] = T::lit(rng.random_range(-s..=s));
        sin[k - 1] = T::lit(rng.random_range(-s..=s));
    }
    PeriodicFunction::new(cos, sin).expect("finite coefficients")
}

/// Random Liouville metric whose profiles have total amplitude at most
/// `2·amplitude·π²/6`, so any `amplitude < 0.3` gives a valid metric.
pub fn liouville<T: Real, R: Rng>(rng: &mut R, degree: usize, amplitude: f64) -> LiouvilleMetric<T> {
    loop {
        let f1 = periodic(rng, degree, amplitude);
        let f2 = periodic(rng, degree, amplitude);
        if let Ok(m) = LiouvilleMetric::new(f1, f2) {
            return m;
        }
    }
}

/// Random perturbation with modes `j, k ≤ degree`, coefficients scaled by `1/(1+j+k)²`.
pub fn perturbation<T: Real, R: Rng>(rng: &mut R, degree: usize, amplitude: f64) -> BivariateFunction<T> {
    let mut modes = Vec::new();
    for j in 0..=degree {
        for k in 0..=degree {
            let s = amplitude / ((1 + j + k) * (1 + j + k)) as f64;
            let mut draw = || T::lit(rng.random_range(-s..=s));
            modes.push(Mode::new(j, k, draw(), draw(), draw(), draw()));
        }
    }
    BivariateFunction::new(modes).expect("finite coefficients")
}

/// Random separable perturbation `u1(x1) + u2(x2)`.
pub fn separable_perturbation<T: Real, R: Rng>(rng: &mut R, degree: usize, amplitude: f64) -> BivariateFunction<T> {
    let u1: PeriodicFunction<T> = periodic(rng, degree, amplitude);
    let u2: PeriodicFunction<T> = periodic(rng, degree, amplitude);
    let c = T::lit(rng.random_range(-amplitude..=amplitude));
    BivariateFunction::separable(&u1.offset_by(c), &u2).expect("band-limited")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_metric() {
        let a: LiouvilleMetric<f64> = liouville(&mut seeded(7), 5, 0.1);
        let b: LiouvilleMetric<f64> = liouville(&mut seeded(7), 5, 0.1);
        assert_eq!(a, b);
        let c: LiouvilleMetric<f64> = liouville(&mut seeded(8), 5, 0.1);
        assert_ne!(a, c);
    }
}
