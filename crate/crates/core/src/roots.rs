//! Bracketed scalar root finding.

use crate::scalar::Real;

/// Brent's method on `[a, b]` with `fa`, `fb` of opposite sign (or zero).
///
/// Stops when the bracket is below `xtol` (absolute) or an exact zero is hit.
pub fn brent<T: Real, E, F>(mut f: F, a: T, b: T, fa: T, fb: T, xtol: T, max_iter: usize) -> Result<T, E>
where
    F: FnMut(T) -> Result<T, E>,
{
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    debug_assert!((fa > T::zero()) != (fb > T::zero()), "root not bracketed");
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * xtol;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b)?;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| Ok::<_, ()>(x * x * x - 2.0);
        let r = brent(f, 0.0, 2.0, -2.0, 6.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }
}
