use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use liouville_core::dynamics::{
    find_rational_torus, flow, matching_function, rotational_range, CircleIntegrals, FlowOptions, GeodesicState,
};
use liouville_core::lengths::{
    check_ncc, length_spectrum, length_spectrum_with, oscillatory_lengths, two_rivers, AxisScan, LengthEntry,
    LengthKind, LengthSpectrum, OscillatoryOptions, SpectrumOptions,
};
use liouville_core::metric::{random, Bump, LiouvilleMetric, PeriodicFunction};
use proptest::prelude::*;

fn lattice_multiplicities(cutoff: f64) -> BTreeMap<i64, usize> {
    let r = cutoff.floor() as i64;
    let mut out = BTreeMap::new();
    for m in -r..=r {
        for n in -r..=r {
            let q = m * m + n * n;
            if q > 0 && (q as f64).sqrt() <= cutoff {
                *out.entry(q).or_insert(0) += 1;
            }
        }
    }
    out
}

#[test]
fn flat_spectrum_is_the_lattice() {
    let t0 = Instant::now();
    let s = length_spectrum(&LiouvilleMetric::<f64>::flat(), 5.1).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let want = lattice_multiplicities(5.1);
    let mut got: BTreeMap<i64, usize> = BTreeMap::new();
    for e in &s.entries {
        let q = e.class.0 * e.class.0 + e.class.1 * e.class.1;
        assert!((e.length - (q as f64).sqrt()).abs() < 1e-10, "{e:?}");
        assert_eq!(e.multiplicity, 1);
        *got.entry(q).or_insert(0) += 1;
    }
    assert_eq!(got, want);
    let fives: Vec<_> = s.entries.iter().filter(|e| (e.length - 5.0).abs() < 1e-10).map(|e| e.class).collect();
    for c in [(3, 4), (-4, 3), (0, 5), (-5, 0), (0, -5)] {
        assert!(fives.contains(&c), "{c:?} missing");
    }
    assert!(elapsed < 1.0, "took {elapsed} s");
}

/// `e + a·cos 2πx` written without cancellation near the turning points
/// `±x⁺`, `cos 2πx⁺ = −e/a`.
fn cos_gap(a: f64, xp: f64, x: f64) -> f64 {
    2.0 * a * (PI * (xp + x)).sin() * (PI * (xp - x)).sin()
}

/// `∫_{-x⁺}^{x⁺} (e + a cos 2πx)^{±1/2} dx` through `x = x⁺ sin φ`, which
/// removes the square-root endpoint singularities; composite Simpson in φ.
fn cos_period(a: f64, e: f64, plus: bool, panels: usize) -> f64 {
    let xp = (-e / a).acos() / (2.0 * PI);
    let h = PI / panels as f64;
    let mut total = 0.0;
    for i in 0..=panels {
        let phi = -PI / 2.0 + h * i as f64;
        let w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let x = xp * phi.sin();
        let dx = xp * phi.cos();
        let gap = cos_gap(a, xp, x);
        let v = if plus {
            gap.sqrt() * dx
        } else if i == 0 || i == panels {
            // Limit of x⁺ cos φ / √gap at φ = ±π/2.
            (xp / (a * PI * (2.0 * PI * xp).sin())).sqrt()
        } else {
            dx / gap.sqrt()
        };
        total += w * v;
    }
    total * h / 3.0
}

#[test]
fn librating_lengths_match_a_grid_scan_oracle() {
    // f1 = a cos 2πx1, f2 = 0: A(e) = cos_period, B(e) = 1/√(1−e).
    let a = 0.1;
    let cutoff = 6.0;
    let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, a), PeriodicFunction::zero()).unwrap();
    let mut oracle = Vec::new();
    let grid = 100_000;
    let es: Vec<f64> = (1..grid).map(|i| -a + 2.0 * a * i as f64 / grid as f64).collect();
    let coarse: Vec<f64> = es.iter().map(|&e| cos_period(a, e, false, 200)).collect();
    for k in 1..=6usize {
        for n in 1..=6u32 {
            let h = |e: f64, a_val: f64| 2.0 * n as f64 * a_val - k as f64 / (1.0 - e).sqrt();
            for i in 0..es.len() - 1 {
                let (h0, h1) = (h(es[i], coarse[i]), h(es[i + 1], coarse[i + 1]));
                if (h0 > 0.0) == (h1 > 0.0) {
                    continue;
                }
                let (mut lo, mut hi) = (es[i], es[i + 1]);
                let sign_lo = h(lo, cos_period(a, lo, false, 4000)) > 0.0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (h(mid, cos_period(a, mid, false, 4000)) > 0.0) == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let e = 0.5 * (lo + hi);
                let len = 2.0 * n as f64 * cos_period(a, e, true, 4000) + k as f64 * (1.0 - e).sqrt();
                if len <= cutoff {
                    oracle.push((k as i64, n, e, len));
                }
            }
        }
    }
    assert!(!oracle.is_empty());
    let scan = AxisScan::new(m.f1(), m.f2(), &OscillatoryOptions::default()).unwrap();
    let got: Vec<_> =
        scan.lengths(6, cutoff).unwrap().into_iter().filter(|e| e.kind == LengthKind::OscillatoryLibrating).collect();
    let fives = oscillatory_lengths(&m, (0, 5), cutoff, &OscillatoryOptions::default()).unwrap();
    assert!(!fives.constant_profile);
    assert_eq!(fives.entries.len(), got.iter().filter(|e| e.class.1 == 5).count() + 2);
    assert_eq!(got.len(), oracle.len(), "{got:?}\n{oracle:?}");
    for (k, n, e, len) in &oracle {
        let hit = got
            .iter()
            .find(|g| g.class == (0, *k) && g.n_osc == Some(*n))
            .unwrap_or_else(|| panic!("missing ({k}, {n})"));
        assert!((hit.e.unwrap() - e).abs() < 1e-9, "e {} vs {e}", hit.e.unwrap());
        assert!((hit.length - len).abs() < 1e-9, "length {} vs {len}", hit.length);
    }

    // Each librating orbit closes under the Hamiltonian flow after its length.
    for g in &got {
        let (x_minus, _) = g.component.unwrap();
        let e = g.e.unwrap();
        let s0 = GeodesicState::new([x_minus, 0.0], [0.0, (1.0 - e).sqrt()]);
        let out = flow(&m, &s0, g.length, &FlowOptions::default()).unwrap();
        let q = out.state.lifted();
        assert!((q[0] - x_minus).abs() < 1e-7 && (q[1] - g.class.1 as f64).abs() < 1e-7, "{q:?} for {g:?}");
    }
}

#[test]
fn rotational_lengths_close_under_the_flow() {
    let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, 0.1), PeriodicFunction::sine(1, 0.05)).unwrap();
    let t = find_rational_torus(&m, (1, 2)).unwrap();
    let x = [0.3, 0.1];
    let s0 = GeodesicState::new(x, t.covector(&m, x));
    let q: [f64; 2] = flow(&m, &s0, t.length, &FlowOptions::default()).unwrap().state.lifted();
    assert!((q[0] - 1.3).abs() < 1e-7 && (q[1] - 2.1).abs() < 1e-7, "{q:?}");
}

/// The invariance checks do not exercise the scan resolution.
fn spectrum(m: &LiouvilleMetric<f64>, cutoff: f64) -> LengthSpectrum<f64> {
    let opts = SpectrumOptions { oscillatory: OscillatoryOptions { grid_points: 10_000, ..Default::default() } };
    length_spectrum_with(m, cutoff, &opts).unwrap()
}

fn key(e: &LengthEntry<f64>) -> ((i64, i64), LengthKind, Option<u32>) {
    (e.class, e.kind, e.n_osc)
}

fn assert_same_spectrum(a: &LengthSpectrum<f64>, b: &LengthSpectrum<f64>, scale: f64, tol: f64) {
    assert_eq!(a.entries.len(), b.entries.len());
    let mut bs: Vec<_> = b.entries.iter().collect();
    bs.sort_by(|x, y| key(x).cmp(&key(y)).then(x.length.partial_cmp(&y.length).unwrap()));
    let mut as_: Vec<_> = a.entries.iter().collect();
    as_.sort_by(|x, y| key(x).cmp(&key(y)).then(x.length.partial_cmp(&y.length).unwrap()));
    for (x, y) in as_.iter().zip(&bs) {
        assert_eq!(key(x), key(y));
        assert!((scale * x.length - y.length).abs() < tol, "{x:?} vs {y:?}");
    }
}

#[test]
fn swap_transposes_the_spectrum() {
    let m = random::liouville::<f64, _>(&mut random::seeded(21), 3, 0.08);
    let a = spectrum(&m, 4.0);
    let b = spectrum(&m.swapped(), 4.0);
    let mut t = a.clone();
    for e in &mut t.entries {
        e.class = (e.class.1, e.class.0);
    }
    assert_same_spectrum(&t, &b, 1.0, 1e-10);
}

#[test]
fn doubling_the_scale_doubles_lengths() {
    let m = random::liouville::<f64, _>(&mut random::seeded(8), 3, 0.08);
    let a = spectrum(&m, 2.5);
    let b = spectrum(&m.rescaled(4.0).unwrap(), 5.0);
    assert_same_spectrum(&a, &b, 2.0, 1e-10);
}

// Even profiles have mirror-image critical points whose values agree only up
// to rounding; a translate breaks the tie differently but is isometric.
#[test]
fn even_profiles_match_their_translates() {
    let f1 = PeriodicFunction::new(vec![0.0, 0.1, 0.03], vec![]).unwrap();
    let f2 = PeriodicFunction::new(vec![0.0, -0.06, 0.0, 0.04], vec![]).unwrap();
    let m = LiouvilleMetric::new(f1.clone(), f2.clone()).unwrap();
    let moved = LiouvilleMetric::new(f1.shifted(0.137), f2.shifted(0.61)).unwrap();
    assert_same_spectrum(&spectrum(&m, 4.3), &spectrum(&moved, 4.3), 1.0, 1e-9);
}

#[test]
fn perturbed_liouville_metric_satisfies_ncc() {
    let m = random::liouville::<f64, _>(&mut random::seeded(2024), 5, 0.05);
    let r = check_ncc(&m, 6.0).unwrap();
    assert!(r.holds, "{:?}", r.witnesses);
}

fn river() -> PeriodicFunction<f64> {
    PeriodicFunction::bump(Bump::new(0.05, 0.05, 0.05)).unwrap()
}

#[test]
fn two_rivers_are_length_isospectral() {
    let f = river();
    let base = spectrum(&two_rivers(&f, 0.5).unwrap(), 5.0);
    assert!(base.oscillatory().any(|e| e.kind == LengthKind::OscillatoryLibrating));
    for c in [0.35, 0.4, 0.65] {
        let s = spectrum(&two_rivers(&f, c).unwrap(), 5.0);
        assert_same_spectrum(&base, &s, 1.0, 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn matching_function_decreases(seed in 0u64..10_000, m in 1i64..4, n in 1i64..4) {
        let g = random::liouville::<f64, _>(&mut random::seeded(seed), 4, 0.1);
        let (i1, i2) = (CircleIntegrals::new(g.f1()), CircleIntegrals::new(g.f2()));
        let (lo, hi) = rotational_range(&g);
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let e = lo + (hi - lo) * i as f64 / 101.0;
            let v = matching_function(&i1, &i2, (m, n), e).unwrap();
            prop_assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn river_offsets_do_not_change_lengths(c in 0.12..0.88f64) {
        let f = river();
        let a = spectrum(&two_rivers(&f, 0.5).unwrap(), 3.0);
        let b = spectrum(&two_rivers(&f, c).unwrap(), 3.0);
        assert_same_spectrum(&a, &b, 1.0, 1e-8);
    }
}
