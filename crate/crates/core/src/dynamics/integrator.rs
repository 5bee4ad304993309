//! Implicit Runge–Kutta steps of collocation type for autonomous systems
//! `y' = F(y)` with fixed-size state.

use crate::scalar::Real;

/// Collocation scheme used by the fixed-step drivers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Three-stage Gauss–Legendre, order 6.
    #[default]
    Gauss6,
    /// Implicit midpoint, order 2.
    Midpoint,
}

const MAX_SWEEPS: usize = 80;

struct Tableau<T> {
    a: [[T; 3]; 3],
    b: [T; 3],
}

fn gauss3<T: Real>() -> Tableau<T> {
    let r = T::lit(15.0).sqrt();
    let l = T::lit;
    let a = [
        [l(5.0 / 36.0), l(2.0 / 9.0) - r / l(15.0), l(5.0 / 36.0) - r / l(30.0)],
        [l(5.0 / 36.0) + r / l(24.0), l(2.0 / 9.0), l(5.0 / 36.0) - r / l(24.0)],
        [l(5.0 / 36.0) + r / l(30.0), l(2.0 / 9.0) + r / l(15.0), l(5.0 / 36.0)],
    ];
    Tableau { a, b: [l(5.0 / 18.0), l(4.0 / 9.0), l(5.0 / 18.0)] }
}

#[inline]
fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, k: &[T; N]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

fn max_abs<T: Real, const N: usize>(v: &[T; N]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Fixed-point sweeps stop at the tolerance or once rounding noise stops
/// the contraction.
fn settled<T: Real>(change: T, previous: T, scale: T, tol: T) -> bool {
    change <= tol * scale || (change >= previous && change <= T::lit(1e3) * tol * scale)
}

/// One step of size `h`. Returns `None` when the stage equations fail to
/// converge by fixed-point iteration (the step is too large).
pub fn step<T: Real, const N: usize, F>(method: Method, y: &[T; N], h: T, f: &F) -> Option<[T; N]>
where
    F: Fn(&[T; N]) -> [T; N],
{
    match method {
        Method::Gauss6 => gauss_step(y, h, f),
        Method::Midpoint => midpoint_step(y, h, f),
    }
}

fn gauss_step<T: Real, const N: usize, F>(y: &[T; N], h: T, f: &F) -> Option<[T; N]>
where
    F: Fn(&[T; N]) -> [T; N],
{
    let tab = gauss3::<T>();
    let k0 = f(y);
    let mut k = [k0; 3];
    let tol = T::epsilon() * T::lit(4.0);
    let mut converged = false;
    let mut previous = T::infinity();
    for _ in 0..MAX_SWEEPS {
        let mut change = T::zero();
        let mut scale = T::zero();
        let mut next = k;
        for i in 0..3 {
            let mut yi = *y;
            for (j, kj) in k.iter().enumerate() {
                let c = h * tab.a[i][j];
                for n in 0..N {
                    yi[n] += c * kj[n];
                }
            }
            next[i] = f(&yi);
            for n in 0..N {
                change = change.max((next[i][n] - k[i][n]).abs());
            }
            scale = scale.max(max_abs(&next[i]));
        }
        k = next;
        if settled(change, previous, scale, tol) {
            converged = true;
            break;
        }
        previous = change;
    }
    if !converged {
        return None;
    }
    let mut out = *y;
    for n in 0..N {
        let inc = tab.b[0] * k[0][n] + tab.b[1] * k[1][n] + tab.b[2] * k[2][n];
        out[n] += h * inc;
    }
    Some(out)
}

fn midpoint_step<T: Real, const N: usize, F>(y: &[T; N], h: T, f: &F) -> Option<[T; N]>
where
    F: Fn(&[T; N]) -> [T; N],
{
    let half = h * T::lit(0.5);
    let mut k = f(y);
    let tol = T::epsilon() * T::lit(4.0);
    let mut previous = T::infinity();
    for _ in 0..MAX_SWEEPS {
        let next = f(&axpy(y, half, &k));
        let mut change = T::zero();
        for n in 0..N {
            change = change.max((next[n] - k[n]).abs());
        }
        k = next;
        if settled(change, previous, max_abs(&k), tol) {
            return Some(axpy(y, h, &k));
        }
        previous = change;
    }
    None
}

/// Number of equal steps and their size covering a duration `t`.
pub fn partition<T: Real>(t: T, dt: T) -> (usize, T) {
    if t == T::zero() {
        return (0, T::zero());
    }
    let n = (t.abs() / dt * (T::one() - T::lit(8.0) * T::epsilon())).ceil().to_usize().unwrap_or(1).max(1);
    (n, t / T::from_count(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    fn error_at_one(method: Method, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut y = [1.0, 0.0];
        for _ in 0..n {
            y = step(method, &y, h, &oscillator).unwrap();
        }
        ((y[0] - 1f64.cos()).powi(2) + (y[1] + 1f64.sin()).powi(2)).sqrt()
    }

    #[test]
    fn observed_orders() {
        let g = (error_at_one(Method::Gauss6, 5) / error_at_one(Method::Gauss6, 10)).log2();
        assert!((g - 6.0).abs() < 0.3, "gauss order {g}");
        let m = (error_at_one(Method::Midpoint, 20) / error_at_one(Method::Midpoint, 40)).log2();
        assert!((m - 2.0).abs() < 0.1, "midpoint order {m}");
    }

    #[test]
    fn quadratic_invariant_is_kept() {
        let mut y = [1.0, 0.0];
        for _ in 0..1000 {
            y = step(Method::Gauss6, &y, 0.1, &oscillator).unwrap();
        }
        assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn partition_lands_exactly() {
        let (n, h) = partition(1.0f64, 0.3);
        assert_eq!(n, 4);
        assert!((h * n as f64 - 1.0).abs() < 1e-15);
        let (n, h) = partition(-0.5f64, 0.1);
        assert_eq!(n, 5);
        assert!(h < 0.0);
    }
}
