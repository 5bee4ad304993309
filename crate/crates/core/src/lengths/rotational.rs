use std::cmp::Ordering;

use crate::dynamics::find_rational_torus;
use crate::lengths::{LengthEntry, LengthError, LengthKind};
use crate::metric::{LiouvilleMetric, PeriodicFunction};
use crate::scalar::Real;

fn compare_slices<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn compare_profiles<T: Real>(f: &PeriodicFunction<T>, g: &PeriodicFunction<T>) -> Ordering {
    let bumps = |p: &PeriodicFunction<T>| -> Vec<T> {
        p.bumps().iter().flat_map(|b| [b.center, b.half_width, b.height]).collect()
    };
    compare_slices(f.cos_coeffs(), g.cos_coeffs())
        .then_with(|| compare_slices(f.sin_coeffs(), g.sin_coeffs()))
        .then_with(|| compare_slices(&bumps(f), &bumps(g)))
}

/// Whether the computation for `class` runs on the swapped metric. Choosing
/// a canonical orientation makes the result invariant under `x1 ↔ x2`.
fn use_swapped<T: Real>(metric: &LiouvilleMetric<T>, class: (i64, i64)) -> bool {
    compare_profiles(metric.f2(), metric.f1()).then(class.1.abs().cmp(&class.0.abs())) == Ordering::Less
}

pub(crate) fn rotational_entry<T: Real>(
    metric: &LiouvilleMetric<T>,
    swapped: &LiouvilleMetric<T>,
    class: (i64, i64),
) -> Result<LengthEntry<T>, LengthError> {
    let (m, n) = class;
    if m == 0 || n == 0 {
        return Err(LengthError::InvalidInput(format!("class ({m}, {n}) is not rotational")));
    }
    let (torus, e) = if use_swapped(metric, class) {
        let t = find_rational_torus(swapped, (n, m))?;
        (t, T::one() - t.e)
    } else {
        let t = find_rational_torus(metric, class)?;
        (t, t.e)
    };
    Ok(LengthEntry {
        length: torus.length,
        class,
        kind: LengthKind::Rotational,
        e: Some(e),
        n_osc: None,
        component: None,
        multiplicity: 1,
    })
}

/// Length of the rational torus of class `(m, n)`, `m·n ≠ 0`:
/// `|m|∫√(e+f1) + |n|∫√(1−e+f2)` at the root `e` of the matching condition.
pub fn rotational_length<T: Real>(
    metric: &LiouvilleMetric<T>,
    class: (i64, i64),
) -> Result<LengthEntry<T>, LengthError> {
    rotational_entry(metric, &metric.swapped(), class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_values() {
        let flat = LiouvilleMetric::<f64>::flat();
        assert!((rotational_length(&flat, (1, 1)).unwrap().length - 2f64.sqrt()).abs() < 1e-14);
        assert!((rotational_length(&flat, (3, 4)).unwrap().length - 5.0).abs() < 1e-13);
        assert!(rotational_length(&flat, (0, 4)).is_err());
    }

    #[test]
    fn swap_is_exact() {
        let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, 0.1), PeriodicFunction::sine(2, 0.07)).unwrap();
        let s = m.swapped();
        for c in [(1i64, 2i64), (3, 1), (2, 2)] {
            let a = rotational_length(&m, c).unwrap();
            let b = rotational_length(&s, (c.1, c.0)).unwrap();
            assert_eq!(a.length, b.length);
        }
    }
}
