use std::f64::consts::PI;

use liouville_core::metric::{random, BivariateFunction, ConformalMetric, LiouvilleMetric, Mode, PeriodicFunction};
use liouville_spectral::{eigenvalues, heat_trace, lattice_spectrum, weyl_count, LaplaceOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

const FOUR_PI2: f64 = 4.0 * PI * PI;

fn grid(n: usize) -> LaplaceOptions {
    LaplaceOptions { grid: n, ..Default::default() }
}

/// `|k|²` over `Z²` by brute force, ascending.
fn lattice_norms(count: usize) -> Vec<i64> {
    let r = 40;
    let mut v: Vec<i64> = (-r..=r).flat_map(|j: i64| (-r..=r).map(move |k: i64| j * j + k * k)).collect();
    v.sort_unstable();
    assert!(v[count] < r * r);
    v.truncate(count);
    v
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn flat_eigenvalues_are_the_lattice() {
    let s = eigenvalues(&LiouvilleMetric::flat().into(), 50, &grid(64)).unwrap();
    let want = lattice_norms(50);
    for (a, &n) in s.eigenvalues.iter().zip(&want) {
        assert!(rel(*a, FOUR_PI2 * n as f64) < 1e-8, "{a} vs {n}");
    }
    // 0, then shells |k|² = 1, 2, 4, 5, 8, 9, 10, 13, 16, 17, ...
    assert_eq!(&s.cluster_sizes()[..6], &[1, 4, 4, 4, 8, 4]);
    assert!(s.residuals.iter().all(|r| *r < 1e-12));
}

#[test]
fn constant_densities_divide_the_flat_spectrum() {
    let flat = eigenvalues(&LiouvilleMetric::flat().into(), 60, &grid(32)).unwrap();
    for c in [2.0, 4.0] {
        let m = LiouvilleMetric::flat().rescaled(c).unwrap();
        let s = eigenvalues(&m.into(), 60, &grid(32)).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&flat.eigenvalues) {
            assert!(rel(*a, b / c) < 1e-14);
        }
        assert!((s.area - c).abs() < 1e-15);
    }
}

fn banded() -> ConformalMetric<f64> {
    let base = random::liouville::<f64, _>(&mut random::seeded(3), 2, 0.1);
    let u = BivariateFunction::new(vec![Mode::new(1, 1, 0.3, 0.1, -0.2, 0.2), Mode::new(2, 1, 0.0, 0.1, 0.1, 0.0)])
        .unwrap();
    ConformalMetric::new(base, u, 0.2).unwrap()
}

#[test]
fn constant_mode_is_exact() {
    let s = eigenvalues(&banded(), 5, &grid(32)).unwrap();
    assert_eq!(s.eigenvalues[0], 0.0);
    assert!(s.residuals[0] < 1e-10);
    assert!(s.eigenvalues[1] > 1.0);
}

#[test]
fn doubling_the_grid_changes_little() {
    // Even in both variables, so cosines and sines decouple and N = 80 stays cheap.
    let base = LiouvilleMetric::new(
        PeriodicFunction::new(vec![0.0, 0.1, -0.04], vec![]).unwrap(),
        PeriodicFunction::new(vec![0.0, 0.07], vec![]).unwrap(),
    )
    .unwrap();
    let u = BivariateFunction::new(vec![Mode::new(1, 1, 0.3, 0.0, 0.0, 0.2), Mode::new(2, 1, 0.1, 0.0, 0.0, -0.1)])
        .unwrap();
    let m = ConformalMetric::new(base, u, 0.2).unwrap();
    let a = eigenvalues(&m, 200, &grid(40)).unwrap();
    let b = eigenvalues(&m, 200, &grid(80)).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).take(100).skip(1) {
        assert!(rel(*x, *y) < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn swapping_the_profiles_is_an_isometry() {
    let m = random::liouville::<f64, _>(&mut random::seeded(17), 3, 0.1);
    let a = eigenvalues(&m.clone().into(), 40, &grid(32)).unwrap();
    let b = eigenvalues(&m.swapped().into(), 40, &grid(32)).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!(rel(*x, *y) < 1e-10, "{x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn conformal_scaling(seed in 0u64..1000, s2 in 0.3f64..3.0) {
        let m = random::liouville::<f64, _>(&mut random::seeded(seed), 2, 0.1);
        let a = eigenvalues(&m.clone().into(), 30, &grid(32)).unwrap();
        let b = eigenvalues(&m.rescaled(s2).unwrap().into(), 30, &grid(32)).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x / s2 - y).abs() <= 1e-10 * (1.0 + y));
        }
    }
}

// Separation of variables. For u = X(x1)Y(x2), −Δu = Λρu splits into
// −X″ − Λf1X = μX and −Y″ − Λ(1 + f2)Y = −μY. With μ_i(Λ), ν_j(Λ) the sorted
// eigenvalues of the two periodic problems, μ_i + ν_j decreases strictly in
// Λ (its slope is below −min ρ), so each pair (i, j) gives one eigenvalue.

/// `c_q`, `|q| ≤ degree`, of a trigonometric polynomial.
fn exp_coefficients(f: &PeriodicFunction<f64>) -> Vec<(i64, Complex64)> {
    let mut out = vec![(0, Complex64::new(f.cos_coeffs()[0], 0.0))];
    for k in 1..f.cos_coeffs().len().max(f.sin_coeffs().len() + 1) {
        let a = f.cos_coeffs().get(k).copied().unwrap_or(0.0);
        let b = f.sin_coeffs().get(k - 1).copied().unwrap_or(0.0);
        out.push((k as i64, Complex64::new(a / 2.0, -b / 2.0)));
        out.push((-(k as i64), Complex64::new(a / 2.0, b / 2.0)));
    }
    out
}

/// Sorted eigenvalues of `−d² − Λ(shift + f)` on the circle.
fn hill(coeffs: &[(i64, Complex64)], shift: f64, lambda: f64) -> Vec<f64> {
    const K: i64 = 24;
    let n = (2 * K + 1) as usize;
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for a in -K..=K {
        let i = (a + K) as usize;
        h[(i, i)] += Complex64::new(FOUR_PI2 * (a * a) as f64 - lambda * shift, 0.0);
        for &(q, c) in coeffs {
            let b = a - q;
            if b.abs() <= K {
                h[(i, (b + K) as usize)] -= c * lambda;
            }
        }
    }
    let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn separation_oracle(m: &LiouvilleMetric<f64>, count: usize) -> Vec<f64> {
    let (c1, c2) = (exp_coefficients(m.f1()), exp_coefficients(m.f2()));
    let g = |i: usize, j: usize, l: f64| hill(&c1, 0.0, l)[i] + hill(&c2, 1.0, l)[j];
    let mut out = Vec::new();
    for i in 0..13 {
        for j in 0..13 {
            if g(i, j, 0.0) <= 0.0 {
                out.push(0.0);
                continue;
            }
            let mut hi = 50.0;
            while g(i, j, hi) > 0.0 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            while hi - lo > 1e-13 * hi {
                let mid = 0.5 * (lo + hi);
                if g(i, j, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out.sort_by(f64::total_cmp);
    out.truncate(count);
    out
}

#[test]
fn separation_oracle_single_profile() {
    let m = LiouvilleMetric::new(PeriodicFunction::cosine(1, 0.1), PeriodicFunction::zero()).unwrap();
    let want = separation_oracle(&m, 20);
    let s = eigenvalues(&m.into(), 20, &grid(32)).unwrap();
    for (a, b) in s.eigenvalues.iter().zip(&want) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn separation_oracle_coupled_profiles() {
    let m = LiouvilleMetric::new(
        PeriodicFunction::new(vec![0.0, 0.1, 0.0], vec![0.03, -0.04]).unwrap(),
        PeriodicFunction::new(vec![0.02, -0.08], vec![0.05]).unwrap(),
    )
    .unwrap();
    let want = separation_oracle(&m, 20);
    let s = eigenvalues(&m.into(), 20, &grid(48)).unwrap();
    for (a, b) in s.eigenvalues.iter().zip(&want) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn weyl_slopes() {
    let flat = lattice_spectrum(2000, 1.0);
    let w = weyl_count(&flat, 10.0);
    assert!((w.slope / w.expected_slope - 1.0).abs() < 0.03, "{w:?}");
    let doubled = lattice_spectrum(2000, 2.0);
    let w2 = weyl_count(&doubled, 10.0);
    assert!((w2.expected_slope - 2.0 / (4.0 * PI)).abs() < 1e-15);
    assert!((w2.slope / w2.expected_slope - 1.0).abs() < 0.03, "{w2:?}");
    // Cosines and sines of each x2-frequency decouple, so this solve is cheap.
    let m = LiouvilleMetric::new(
        PeriodicFunction::new(vec![0.0, 0.12, -0.05], vec![0.04]).unwrap(),
        PeriodicFunction::zero(),
    )
    .unwrap();
    let opts = LaplaceOptions { grid: 96, residual_tolerance: 1e-5, ..Default::default() };
    let s = eigenvalues(&m.into(), 2000, &opts).unwrap();
    let w = weyl_count(&s, 10.0);
    assert!((w.slope / w.expected_slope - 1.0).abs() < 0.03, "{w:?}");
}

/// `Σ_n e^{−4π²n²t}`.
fn theta(t: f64) -> f64 {
    1.0 + 2.0 * (1..200).map(|n| (-FOUR_PI2 * (n * n) as f64 * t).exp()).sum::<f64>()
}

#[test]
fn flat_heat_trace_is_a_squared_theta_sum() {
    let s = eigenvalues(&LiouvilleMetric::flat().into(), 1024, &grid(64)).unwrap();
    for t in [0.05, 0.1] {
        let h = heat_trace(&s, t).unwrap();
        assert!(rel(h.value, theta(t) * theta(t)) < 1e-8, "{t}: {} vs {}", h.value, theta(t).powi(2));
    }
    let l = lattice_spectrum(20000, 1.0);
    let h = heat_trace(&l, 0.01).unwrap();
    assert!(rel(h.value, theta(0.01).powi(2)) < 1e-8);
    assert!((h.scaled() * 4.0 * PI - 1.0).abs() < 0.01);
    let h2 = heat_trace(&lattice_spectrum(40000, 2.0), 0.01).unwrap();
    assert!((h2.scaled() * 4.0 * PI / 2.0 - 1.0).abs() < 0.01);
}
