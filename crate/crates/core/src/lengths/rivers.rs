use crate::lengths::LengthError;
use crate::metric::{LiouvilleMetric, PeriodicFunction};
use crate::scalar::Real;

/// Circular distance between two points of `R/Z`.
fn circle_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b).frac();
    d.min(T::one() - d)
}

/// Metric `(1 + f(x2) + f(x2 − c))(dx1² + dx2²)` for a profile `f` made of
/// nonnegative bumps whose shifted copy does not meet the original.
pub fn two_rivers<T: Real>(profile: &PeriodicFunction<T>, offset: T) -> Result<LiouvilleMetric<T>, LengthError> {
    let fourier_free =
        profile.cos_coeffs().iter().all(|c| *c == T::zero()) && profile.sin_coeffs().iter().all(|c| *c == T::zero());
    if !fourier_free || profile.bumps().iter().any(|b| b.height < T::zero()) {
        return Err(LengthError::NotCompactlySupported);
    }
    let bumps = profile.bumps();
    for (i, a) in bumps.iter().enumerate() {
        for (j, b) in bumps.iter().enumerate() {
            let gap = circle_distance(a.center, b.center + offset);
            if gap < a.half_width + b.half_width {
                return Err(LengthError::OverlappingRivers(format!(
                    "bump {i} meets bump {j} shifted by {:.6}",
                    offset.as_f64()
                )));
            }
        }
    }
    let f2 = profile.add(&profile.shifted(offset));
    Ok(LiouvilleMetric::new(PeriodicFunction::zero(), f2)?)
}
