use crate::metric::PeriodicFunction;
use crate::scalar::Real;

const MIN_GRID: usize = 4096;
const FLAT_SLOPE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    Min,
    Max,
    /// Neither a local minimum nor a local maximum (terrace or inflection).
    Degenerate,
}

/// A connected set where `f' = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticalSet<T> {
    Point {
        x: T,
        value: T,
        kind: CriticalKind,
    },
    /// `[a, b]` with `a ∈ [0, 1)` and `b ≥ a` (may exceed 1 when wrapping).
    Interval {
        a: T,
        b: T,
        value: T,
        kind: CriticalKind,
    },
}

impl<T: Real> CriticalSet<T> {
    pub fn value(&self) -> T {
        match *self {
            CriticalSet::Point { value, .. } | CriticalSet::Interval { value, .. } => value,
        }
    }

    pub fn kind(&self) -> CriticalKind {
        match *self {
            CriticalSet::Point { kind, .. } | CriticalSet::Interval { kind, .. } => kind,
        }
    }

    /// Leftmost and rightmost point of the set.
    pub fn span(&self) -> (T, T) {
        match *self {
            CriticalSet::Point { x, .. } => (x, x),
            CriticalSet::Interval { a, b, .. } => (a, b),
        }
    }

    /// A representative point in `[0, 1)`.
    pub fn representative(&self) -> T {
        let (a, b) = self.span();
        ((a + b) * T::lit(0.5)).frac()
    }
}

/// Global extrema of a periodic function.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrema<T> {
    pub min: T,
    pub max: T,
    /// Points attaining the minimum (interval midpoints for flat minima).
    pub argmin: Vec<T>,
    pub argmax: Vec<T>,
    /// Flat critical intervals, reported as `(a, b)`.
    pub flat: Vec<(T, T)>,
    /// Set when the function is constant and every point is critical.
    pub constant: bool,
}

fn grid_size<T: Real>(f: &PeriodicFunction<T>) -> usize {
    let scale = f.feature_scale().as_f64();
    let want = (64.0 / scale).ceil() as usize;
    want.max(MIN_GRID).next_power_of_two()
}

/// All critical sets of `f`, sorted by position. Empty for constants.
pub fn critical_points<T: Real>(f: &PeriodicFunction<T>) -> Vec<CriticalSet<T>> {
    if f.is_constant() {
        return Vec::new();
    }
    let n = grid_size(f);
    let h = T::from_count(n).recip();
    let xs: Vec<T> = (0..n).map(|i| T::from_count(i) * h).collect();
    let slope: Vec<T> = xs.iter().map(|&x| f.derivative(x)).collect();
    let flat = T::lit(FLAT_SLOPE);
    let sign: Vec<i8> = slope
        .iter()
        .map(|&s| {
            if s.abs() < flat {
                0
            } else if s > T::zero() {
                1
            } else {
                -1
            }
        })
        .collect();

    // Rotate so that scanning starts at a non-flat point.
    let Some(start) = sign.iter().position(|&s| s != 0) else {
        // Numerically flat everywhere although not exactly constant.
        let v = f.eval(T::zero());
        return vec![CriticalSet::Interval { a: T::zero(), b: T::one(), value: v, kind: CriticalKind::Degenerate }];
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let a = (start + i) % n;
        let b = (start + i + 1) % n;
        if sign[b] == 0 {
            // Run of flat samples beginning at b.
            let mut len = 0;
            while sign[(b + len) % n] == 0 {
                len += 1;
            }
            let after = (b + len) % n;
            let kind = classify(sign[a], sign[after]);
            if len == 1 {
                let x = polish(f, xs[a], xs[a] + h + h, xs[b]);
                out.push(CriticalSet::Point { x: x.frac(), value: f.eval(x), kind });
            } else {
                let lo = xs[b];
                let mut hi = xs[(b + len - 1) % n];
                if hi < lo {
                    hi += T::one();
                }
                let value = f.eval((lo + hi) * T::lit(0.5));
                out.push(CriticalSet::Interval { a: lo, b: hi, value, kind });
            }
            i += len + 1;
            continue;
        }
        if sign[a] != sign[b] {
            let lo = xs[a];
            let hi = if b == 0 { T::one() } else { xs[b] };
            let x = polish(f, lo, hi, (lo + hi) * T::lit(0.5));
            let kind = classify(sign[a], sign[b]);
            out.push(CriticalSet::Point { x: x.frac(), value: f.eval(x), kind });
        }
        i += 1;
    }
    out.sort_by(|p, q| p.span().0.partial_cmp(&q.span().0).unwrap());
    out
}

fn classify(before: i8, after: i8) -> CriticalKind {
    match (before, after) {
        (1, -1) => CriticalKind::Max,
        (-1, 1) => CriticalKind::Min,
        _ => CriticalKind::Degenerate,
    }
}

/// Root of `f'` in `[lo, hi]` by safeguarded Newton.
fn polish<T: Real>(f: &PeriodicFunction<T>, mut lo: T, mut hi: T, start: T) -> T {
    let d_lo = f.derivative(lo);
    let mut x = start;
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..100 {
        let j = f.jet(x);
        if j[1] == T::zero() {
            return x;
        }
        if (j[1] > T::zero()) == (d_lo > T::zero()) {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - j[1] / j[2];
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi) * T::lit(0.5);
        }
        if (next - x).abs() <= tol * (T::one() + x.abs()) {
            return next;
        }
        x = next;
        if hi - lo <= tol {
            break;
        }
    }
    x
}

/// Global extrema with critical points polished by Newton iteration.
pub fn extrema<T: Real>(f: &PeriodicFunction<T>) -> Extrema<T> {
    if f.is_constant() {
        let c = f.eval(T::zero());
        return Extrema {
            min: c,
            max: c,
            argmin: vec![T::zero()],
            argmax: vec![T::zero()],
            flat: vec![(T::zero(), T::one())],
            constant: true,
        };
    }
    let crit = critical_points(f);
    let min = crit.iter().map(|c| c.value()).fold(T::infinity(), T::min);
    let max = crit.iter().map(|c| c.value()).fold(T::neg_infinity(), T::max);
    let tie = |a: T, b: T| (a - b).abs() <= T::lit(1e-12) * (T::one() + b.abs());
    let argmin = crit.iter().filter(|c| tie(c.value(), min)).map(|c| c.representative()).collect();
    let argmax = crit.iter().filter(|c| tie(c.value(), max)).map(|c| c.representative()).collect();
    let flat = crit
        .iter()
        .filter_map(|c| match *c {
            CriticalSet::Interval { a, b, .. } => Some((a, b)),
            _ => None,
        })
        .collect();
    Extrema { min, max, argmin, argmax, flat, constant: false }
}
