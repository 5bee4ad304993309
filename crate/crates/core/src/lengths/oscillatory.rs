//! Oscillatory closed geodesics in the vertical classes `(0, k)`: critical
//! circles `x1 = x*` with `f1'(x*) = 0`, and librating orbits confined to a
//! component `(x⁻, x⁺)` of `{e + f1 > 0}` while `x2` winds `k` times.
//!
//! The librating orbits solve `2n·A(e) = k·B(e)` with
//! `A(e) = ∫_{x⁻}^{x⁺} dx1/√(e+f1)` and `B(e) = ∫ dx2/√(1−e+f2)`. For each
//! component the ratio `R(e) = B/(2A)` is scanned on a grid over `e` and every
//! crossing of `k·R` with an integer `n` is refined by Brent's method.

use crate::lengths::{LengthEntry, LengthError, LengthKind};
use crate::metric::{critical_points, CriticalSet, LiouvilleMetric, PeriodicFunction};
use crate::quadrature::{integrate_between, Anchor, CircleIntegrator, Power, QuadratureError, Shifted, TanhSinh};
use crate::roots::brent;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct OscillatoryOptions {
    /// Total number of `e` samples over all segments.
    pub grid_points: usize,
    /// Components narrower than this are merged into the critical entry.
    pub min_component_width: f64,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        Self { grid_points: 100_000, min_component_width: 1e-6 }
    }
}

#[derive(Clone, Debug)]
struct Arc<T> {
    from: T,
    to: T,
    v_from: T,
    v_to: T,
}

/// Superlevel component `{f > −e}` between an up-crossing arc and the next
/// down-crossing arc, valid on one segment of `e`.
#[derive(Clone, Debug)]
struct Component<T> {
    up: Arc<T>,
    down: Arc<T>,
    interior: Vec<T>,
}

#[derive(Clone, Debug)]
struct Segment<T> {
    lo: T,
    hi: T,
    components: Vec<Component<T>>,
}

/// Precomputed data for scanning one profile `f` (oscillating) against the
/// transverse profile `g` (winding).
#[derive(Clone, Debug)]
pub struct AxisScan<'a, T> {
    f: &'a PeriodicFunction<T>,
    crit: Vec<CriticalSet<T>>,
    segments: Vec<Segment<T>>,
    g_int: CircleIntegrator<'a, T>,
    opts: OscillatoryOptions,
}

/// Result of [`oscillatory_lengths`].
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatoryLengths<T> {
    pub entries: Vec<LengthEntry<T>>,
    /// Set when the oscillating profile is constant, so that every line in
    /// the class direction is a closed geodesic.
    pub constant_profile: bool,
}

struct Sample<T> {
    e: T,
    ratio: Vec<Option<T>>,
}

impl<'a, T: Real> AxisScan<'a, T> {
    pub fn new(
        f: &'a PeriodicFunction<T>,
        g: &'a PeriodicFunction<T>,
        opts: &OscillatoryOptions,
    ) -> Result<Self, LengthError> {
        let crit = if f.is_constant() { Vec::new() } else { critical_points(f) };
        let segments = if crit.len() >= 2 { build_segments(f, &crit) } else { Vec::new() };
        Ok(Self { f, crit, segments, g_int: CircleIntegrator::new(g), opts: *opts })
    }

    /// All oscillatory entries of classes `(0, k)`, `1 ≤ k ≤ k_max`, with
    /// length at most `cutoff`.
    pub fn lengths(&self, k_max: usize, cutoff: T) -> Result<Vec<LengthEntry<T>>, LengthError> {
        let limit = cutoff * (T::one() + T::lit(1e-12));
        let mut out = Vec::new();
        let constant = self.f.is_constant() || self.crit.len() < 2;
        if constant {
            let c = self.f.mean();
            let d = self.g_int.integrate(T::one() + c, Power::PlusHalf)?;
            for k in 1..=k_max {
                let length = T::from_count(k) * d;
                if length <= limit {
                    out.push(critical_entry(k, length, -c, (T::zero(), T::one())));
                }
            }
            return Ok(out);
        }
        for c in &self.crit {
            let d = self.g_int.integrate(T::one() + c.value(), Power::PlusHalf)?;
            for k in 1..=k_max {
                let length = T::from_count(k) * d;
                if length <= limit {
                    out.push(critical_entry(k, length, -c.value(), c.span()));
                }
            }
        }
        let budget = (self.opts.grid_points / self.segments.len().max(1)).max(64);
        for seg in &self.segments {
            self.scan_segment(seg, budget, k_max, limit, &mut out)?;
        }
        Ok(out)
    }

    fn transverse(&self, e: T, power: Power) -> Result<T, QuadratureError> {
        self.g_int.integrate(T::one() - e, power)
    }

    fn scan_segment(
        &self,
        seg: &Segment<T>,
        points: usize,
        k_max: usize,
        limit: T,
        out: &mut Vec<LengthEntry<T>>,
    ) -> Result<(), LengthError> {
        let coarse = TanhSinh::coarse();
        let width = seg.hi - seg.lo;
        let mut samples = Vec::with_capacity(points);
        for e in clustered_grid(seg.lo, width, points) {
            let b = self.g_int.clone().with_rule(coarse).integrate(T::one() - e, Power::MinusHalf)?;
            let ratio = seg
                .components
                .iter()
                .map(|c| {
                    let cut = self.cut(c, e, &coarse).ok().flatten()?;
                    Some(b / (cut.a + cut.a))
                })
                .collect();
            samples.push(Sample { e, ratio });
        }
        for (ci, comp) in seg.components.iter().enumerate() {
            for w in samples.windows(2) {
                let (Some(r0), Some(r1)) = (w[0].ratio[ci], w[1].ratio[ci]) else { continue };
                for k in 1..=k_max {
                    let kk = T::from_count(k);
                    let (a, b) = (kk * r0, kk * r1);
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    let first = lo.floor().to_i64().unwrap_or(0) + 1;
                    let last = hi.floor().to_i64().unwrap_or(0);
                    for n in first.max(1)..=last {
                        if let Some(entry) = self.refine(comp, k, n as u32, w[0].e, w[1].e)? {
                            if entry.length <= limit {
                                out.push(entry);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn refine(
        &self,
        comp: &Component<T>,
        k: usize,
        n: u32,
        e0: T,
        e1: T,
    ) -> Result<Option<LengthEntry<T>>, LengthError> {
        let rule = TanhSinh::default();
        let kk = T::from_count(k);
        let nn = T::from_count(n as usize);
        let h = |e: T| -> Result<T, QuadratureError> {
            let b = self.transverse(e, Power::MinusHalf)?;
            match self.cut(comp, e, &rule)? {
                Some(cut) => Ok(kk * b - (nn + nn) * cut.a),
                None => Err(QuadratureError::InvalidInterval),
            }
        };
        let (h0, h1) = match (h(e0), h(e1)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(None),
        };
        if (h0 > T::zero()) == (h1 > T::zero()) && h0 != T::zero() && h1 != T::zero() {
            return Ok(None);
        }
        let e = brent(h, e0, e1, h0, h1, T::lit(4.0) * T::epsilon() * (T::one() + e0.abs()), 200)?;
        let Some(cut) = self.cut(comp, e, &rule)? else { return Ok(None) };
        let c = self.integrate_cut(&cut, e, Power::PlusHalf, &rule)?;
        let d = self.transverse(e, Power::PlusHalf)?;
        Ok(Some(LengthEntry {
            length: (nn + nn) * c + kk * d,
            class: (0, k as i64),
            kind: LengthKind::OscillatoryLibrating,
            e: Some(e),
            n_osc: Some(n),
            component: Some((cut.left.point(), cut.right.point())),
            multiplicity: 1,
        }))
    }

    /// Endpoints of the component at `e` and `A(e)`; `None` when the
    /// component is narrower than the merge width.
    fn cut(&self, comp: &Component<T>, e: T, rule: &TanhSinh<T>) -> Result<Option<Cut<T>>, QuadratureError> {
        let g = Shifted::new(self.f, e);
        let left = crossing(&g, &comp.up)?;
        let right = crossing(&g, &comp.down)?;
        if right.point() - left.point() < T::lit(self.opts.min_component_width) {
            return Ok(None);
        }
        let mut cut = Cut { left, right, interior: Vec::new(), a: T::zero() };
        for &x in &comp.interior {
            if x > left.point() && x < right.point() {
                cut.interior.push(Anchor::regular(&g, x));
            }
        }
        cut.a = self.integrate_cut(&cut, e, Power::MinusHalf, rule)?;
        Ok(Some(cut))
    }

    fn integrate_cut(&self, cut: &Cut<T>, e: T, power: Power, rule: &TanhSinh<T>) -> Result<T, QuadratureError> {
        let g = Shifted::new(self.f, e);
        let mut anchors = Vec::with_capacity(cut.interior.len() + 2);
        anchors.push(cut.left);
        anchors.extend(cut.interior.iter().copied());
        anchors.push(cut.right);
        let mut total = T::zero();
        for w in anchors.windows(2) {
            total += integrate_between(&g, &w[0], &w[1], power, rule)?;
        }
        Ok(total)
    }
}

#[derive(Clone, Debug)]
struct Cut<T> {
    left: Anchor<T>,
    right: Anchor<T>,
    interior: Vec<Anchor<T>>,
    a: T,
}

fn critical_entry<T: Real>(k: usize, length: T, e: T, span: (T, T)) -> LengthEntry<T> {
    LengthEntry {
        length,
        class: (0, k as i64),
        kind: LengthKind::OscillatoryCritical,
        e: Some(e),
        n_osc: None,
        component: Some(span),
        multiplicity: 1,
    }
}

/// Root of `g` on a monotone arc, polished into a root anchor.
fn crossing<T: Real>(g: &Shifted<'_, T>, arc: &Arc<T>) -> Result<Anchor<T>, QuadratureError> {
    let shift = g.shift;
    let (ga, gb) = (shift + arc.v_from, shift + arc.v_to);
    // Critical values equal up to rounding can leave a level a few ulps
    // outside this arc's range.
    if (ga > T::zero()) == (gb > T::zero()) && ga != T::zero() && gb != T::zero() {
        return Err(QuadratureError::InvalidInterval);
    }
    let x =
        brent(|x: T| Ok::<T, QuadratureError>(g.eval(x)), arc.from, arc.to, ga, gb, T::epsilon() * T::lit(4.0), 200)?;
    Ok(Anchor::root(g, x))
}

/// Points in `(lo, lo + width)` clustered double-exponentially at both ends.
fn clustered_grid<T: Real>(lo: T, width: T, points: usize) -> Vec<T> {
    let t_max = T::lit(3.2);
    let half = T::lit(0.5);
    let pi = T::PI();
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let t = -t_max + (t_max + t_max) * T::from_count(i + 1) / T::from_count(points + 1);
        let u = half * pi * t.sinh();
        let e2 = (-(u + u).abs()).exp();
        let near = width * e2 / (T::one() + e2);
        let x = if t < T::zero() { lo + near } else { lo + width - near };
        if x > lo && x < lo + width {
            out.push(x);
        }
    }
    out.dedup();
    out
}

fn build_segments<T: Real>(f: &PeriodicFunction<T>, crit: &[CriticalSet<T>]) -> Vec<Segment<T>> {
    let ns = crit.len();
    let mut arcs = Vec::with_capacity(ns);
    for i in 0..ns {
        let from = crit[i].span().1;
        let mut to = crit[(i + 1) % ns].span().0;
        if i + 1 == ns || to < from {
            to += T::one();
        }
        arcs.push(Arc { from, to, v_from: crit[i].value(), v_to: crit[(i + 1) % ns].value() });
    }
    let min = crit.iter().map(|c| c.value()).fold(T::infinity(), T::min);
    let max = crit.iter().map(|c| c.value()).fold(T::neg_infinity(), T::max);
    let (e_lo, e_hi) = (-max, -min);
    let mut cuts: Vec<T> = crit.iter().map(|c| -c.value()).filter(|e| *e > e_lo && *e < e_hi).collect();
    cuts.push(e_lo);
    cuts.push(e_hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-14));
    let mut segments = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let level = -(lo + hi) * T::lit(0.5);
        let components = components_at(f, crit, &arcs, level);
        if !components.is_empty() {
            segments.push(Segment { lo, hi, components });
        }
    }
    segments
}

fn components_at<T: Real>(
    f: &PeriodicFunction<T>,
    crit: &[CriticalSet<T>],
    arcs: &[Arc<T>],
    level: T,
) -> Vec<Component<T>> {
    let ns = arcs.len();
    // +1 for an up-crossing, -1 for a down-crossing.
    let dir: Vec<i8> = arcs
        .iter()
        .map(|a| {
            if a.v_from < level && a.v_to > level {
                1
            } else if a.v_from > level && a.v_to < level {
                -1
            } else {
                0
            }
        })
        .collect();
    let mut out = Vec::new();
    let bumps = f.breakpoints();
    for i in 0..ns {
        if dir[i] != 1 {
            continue;
        }
        let mut j = (i + 1) % ns;
        let mut steps = 1;
        while dir[j] != -1 {
            j = (j + 1) % ns;
            steps += 1;
            if steps > ns {
                break;
            }
        }
        if dir[j] != -1 {
            continue;
        }
        let up = arcs[i].clone();
        let mut down = arcs[j].clone();
        if j <= i {
            down.from += T::one();
            down.to += T::one();
        }
        let mut interior = Vec::new();
        let mut idx = (i + 1) % ns;
        let mut lift = if idx <= i { T::one() } else { T::zero() };
        while idx != (j + 1) % ns {
            let (a, b) = crit[idx].span();
            interior.push(a + lift);
            if b != a {
                interior.push(b + lift);
            }
            if idx == j {
                break;
            }
            idx = (idx + 1) % ns;
            if idx == 0 {
                lift = T::one();
            }
        }
        for &x in &bumps {
            for s in [T::zero(), T::one()] {
                let y = x + s;
                if y > up.from && y < down.to {
                    interior.push(y);
                }
            }
        }
        interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
        interior.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12));
        out.push(Component { up, down, interior });
    }
    out
}

/// Oscillatory entries of class `(0, k)` or `(k, 0)` up to `cutoff`.
pub fn oscillatory_lengths<T: Real>(
    metric: &LiouvilleMetric<T>,
    class: (i64, i64),
    cutoff: T,
    opts: &OscillatoryOptions,
) -> Result<OscillatoryLengths<T>, LengthError> {
    let (m, n) = class;
    if (m == 0) == (n == 0) {
        return Err(LengthError::InvalidInput(format!("class ({m}, {n}) is not oscillatory")));
    }
    let k = m.abs().max(n.abs()) as usize;
    let vertical = m == 0;
    let swapped;
    let (f, g) = if vertical {
        (metric.f1(), metric.f2())
    } else {
        swapped = metric.swapped();
        (swapped.f1(), swapped.f2())
    };
    let scan = AxisScan::new(f, g, opts)?;
    let constant_profile = f.is_constant();
    let mut entries: Vec<LengthEntry<T>> = scan
        .lengths(k, cutoff)?
        .into_iter()
        .filter(|e| e.class.1 as usize == k)
        .map(|mut e| {
            e.class = if vertical { (0, n) } else { (m, 0) };
            e
        })
        .collect();
    entries = crate::lengths::dedup(entries);
    entries.sort_by(crate::lengths::entry_order);
    Ok(OscillatoryLengths { entries, constant_profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_vertical_class() {
        let flat = LiouvilleMetric::<f64>::flat();
        let r = oscillatory_lengths(&flat, (0, 1), 3.0, &OscillatoryOptions::default()).unwrap();
        assert!(r.constant_profile);
        assert_eq!(r.entries.len(), 1);
        assert!((r.entries[0].length - 1.0).abs() < 1e-15);
    }

    #[test]
    fn critical_circle_at_the_maximum() {
        let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, 0.1), PeriodicFunction::zero()).unwrap();
        let opts = OscillatoryOptions { grid_points: 2000, ..Default::default() };
        let r = oscillatory_lengths(&m, (0, 1), 3.0, &opts).unwrap();
        let crit: Vec<_> = r.entries.iter().filter(|e| e.kind == LengthKind::OscillatoryCritical).collect();
        assert_eq!(crit.len(), 2);
        assert!(crit.iter().any(|e| (e.length - 1.1f64.sqrt()).abs() < 1e-13));
        assert!(crit.iter().any(|e| (e.length - 0.9f64.sqrt()).abs() < 1e-13));
    }

    #[test]
    fn grid_clusters_at_the_ends() {
        let g = clustered_grid(0.0f64, 1.0, 1000);
        assert!(g[0] < 1e-12 && 1.0 - g[g.len() - 1] < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
