use std::f64::consts::PI;

use liouville_core::deformation::{
    energy, first_order, first_variation_energy, first_variation_length, geodesic_continuation, geodesic_loop,
    perturbation_energy, rigidity_test, second_variation_energy, torus_geodesic, xray, ParamPath, PathOptions,
    RigidityOptions, RigidityStage, VariationField, Verdict,
};
use liouville_core::dynamics::{find_rational_torus, loop_function};
use liouville_core::lengths::rotational_length;
use liouville_core::metric::{random, BivariateFunction, ConformalMetric, LiouvilleMetric, Mode, PeriodicFunction};
use liouville_core::{ConformalMetricF64, LiouvilleMetricF64};
use rand::Rng;

const N: usize = 512;

fn base_metric() -> LiouvilleMetricF64 {
    random::liouville(&mut random::seeded(11), 3, 0.15)
}

fn random_field<R: Rng>(rng: &mut R, terms: usize) -> VariationField<f64> {
    let coeffs: Vec<[f64; 2]> = (0..terms)
        .map(|k| {
            let s = 1.0 / (1.0 + k as f64);
            [rng.random_range(-s..=s), rng.random_range(-s..=s)]
        })
        .collect();
    VariationField::sine_series(N, &coeffs).unwrap()
}

fn wobbly_path() -> ParamPath<f64> {
    ParamPath::from_fn((1, 1), N, |t: f64| {
        [0.1 + t + 0.05 * (2.0 * PI * t).sin(), 0.2 + t + 0.03 * (4.0 * PI * t).sin()]
    })
    .unwrap()
}

fn tight() -> PathOptions<f64> {
    let mut o = PathOptions::default();
    o.loops.tolerance = 1e-13;
    o
}

#[test]
fn reparametrized_segment_has_more_energy() {
    // φ(t) = t + 0.1 sin(2πt)/(2π), so E = 25∫(1 + 0.1cos 2πt)² = 25.125.
    let flat = LiouvilleMetricF64::flat();
    let p = ParamPath::from_fn((3, 4), N, |t: f64| {
        let s = t + 0.1 * (2.0 * PI * t).sin() / (2.0 * PI);
        [3.0 * s, 4.0 * s]
    })
    .unwrap();
    let e = energy(&flat, &p);
    assert!((e - 25.125).abs() < 1e-10, "{e}");
    assert!(e > 25.0);
}

#[test]
fn variations_match_finite_differences() {
    let m = base_metric();
    let p = wobbly_path();
    let mut rng = random::seeded(5);
    for _ in 0..5 {
        let d1 = random_field(&mut rng, 6);
        let d2 = random_field(&mut rng, 6);
        let e = |d: &VariationField<f64>, h: f64| energy(&m, &p.perturbed(d, h).unwrap());
        let de = first_variation_energy(&m, &p, &d1).unwrap();
        for h in [1e-5, 1e-7] {
            let fd = (e(&d1, h) - e(&d1, -h)) / (2.0 * h);
            assert!((fd - de).abs() < 1e-7 * (1.0 + de.abs()), "h={h}: {fd} vs {de}");
        }
        let h = 1e-4;
        let q = second_variation_energy(&m, &p, &d1, &d1).unwrap();
        let fd = (e(&d1, h) - 2.0 * energy(&m, &p) + e(&d1, -h)) / (h * h);
        assert!((fd - q).abs() < 1e-5 * (1.0 + q.abs()), "{fd} vs {q}");

        // Mixed term by polarization.
        let sum = d1.combine(1.0, &d2, 1.0).unwrap();
        let diff = d1.combine(1.0, &d2, -1.0).unwrap();
        let mixed = (e(&sum, h) + e(&sum, -h) - e(&diff, h) - e(&diff, -h)) / (4.0 * h * h);
        let q12 = second_variation_energy(&m, &p, &d1, &d2).unwrap();
        assert!((mixed - q12).abs() < 1e-5 * (1.0 + q12.abs()), "{mixed} vs {q12}");
        assert_eq!(q12.to_bits(), second_variation_energy(&m, &p, &d2, &d1).unwrap().to_bits());
    }
}

#[test]
fn torus_geodesics_are_critical_and_minimizing() {
    let m = base_metric();
    let mut rng = random::seeded(9);
    for class in [(1, 1), (2, 1), (1, 3)] {
        let torus = find_rational_torus(&m, class).unwrap();
        let p = torus_geodesic(&m, &torus, [0.1, 0.2], &PathOptions::default()).unwrap();
        let l2: f64 = torus.length * torus.length;
        let e = energy(&m, &p);
        assert!((e - l2).abs() < 1e-9 * l2, "{class:?}: {e} vs {l2}");
        assert!((energy(&m, &p.refined()) - e).abs() < 1e-8, "{class:?}");
        for _ in 0..30 {
            let d = random_field(&mut rng, 8);
            let de = first_variation_energy(&m, &p, &d).unwrap();
            assert!(de.abs() < 1e-7, "{class:?}: dE = {de}");
        }
        for _ in 0..100 {
            let d = random_field(&mut rng, 8);
            let q = second_variation_energy(&m, &p, &d, &d).unwrap();
            assert!(q >= -1e-8, "{class:?}: d²E = {q}");
        }
    }
}

#[test]
fn loops_of_a_perturbed_metric_are_critical() {
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(3), 2, 0.3);
    let g = ConformalMetricF64::new(base_metric(), u, 0.02).unwrap();
    let (p, sol) = geodesic_loop(&g, (1, 1), [0.3, 0.1], &tight()).unwrap();
    let l2 = sol.length * sol.length;
    assert!((energy(&g, &p) - l2).abs() < 1e-9 * l2);
    let mut rng = random::seeded(4);
    for _ in 0..20 {
        let d = random_field(&mut rng, 8);
        assert!(first_variation_energy(&g, &p, &d).unwrap().abs() < 1e-7);
    }
}

#[test]
fn separable_xray_matches_the_rotational_length_derivative() {
    let m = base_metric();
    let mut rng = random::seeded(21);
    let u1: PeriodicFunction<f64> = random::periodic(&mut rng, 3, 0.3);
    let u2: PeriodicFunction<f64> = random::periodic(&mut rng, 3, 0.3);
    let u = BivariateFunction::separable(&u1, &u2).unwrap();
    for class in [(1, 1), (2, 1)] {
        let fv = first_variation_length(&m, class, &u, 6, &PathOptions::default()).unwrap();
        let shifted = |e: f64| {
            let me = LiouvilleMetric::new(m.f1().add(&u1.scaled(e)), m.f2().add(&u2.scaled(e))).unwrap();
            rotational_length(&me, class).unwrap().length
        };
        for e in [1e-5, 1e-6] {
            let fd = (shifted(e) - shifted(-e)) / (2.0 * e);
            for v in &fv.values {
                assert!((v - fd).abs() < 1e-6, "{class:?} ε={e}: {v} vs {fd}");
            }
        }
    }
}

#[test]
fn xray_matches_the_loop_function_derivative() {
    let m = base_metric();
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(8), 2, 0.4);
    let g = ConformalMetric::new(m.clone(), u.clone(), 0.0).unwrap();
    let opts = tight();
    let torus = find_rational_torus(&m, (1, 1)).unwrap();
    for x in [[0.0, 0.0], [0.25, 0.6], [0.7, 0.35]] {
        let d = xray(&m, &torus, &u, x, &opts).unwrap();
        let psi = |e: f64| loop_function(&g.with_epsilon(e).unwrap(), (1, 1), x, &opts.loops).unwrap().length;
        let e = 1e-4;
        let fd = (psi(e) - psi(-e)) / (2.0 * e);
        assert!((d - fd).abs() < 1e-6, "{x:?}: {d} vs {fd}");
    }
}

#[test]
fn zero_perturbation_leaves_the_geodesic_fixed() {
    let g = ConformalMetricF64::new(base_metric(), BivariateFunction::zero(), 0.0).unwrap();
    let paths = geodesic_continuation(&g, (1, 1), [0.2, 0.4], &[0.0, 0.01, 0.05], &PathOptions::default()).unwrap();
    for p in &paths[1..] {
        assert!(VariationField::difference(&paths[0], p, 1.0).unwrap().max_norm() < 1e-14);
    }
}

#[test]
fn continuation_retraces_its_steps() {
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(12), 2, 0.4);
    let g = ConformalMetricF64::new(base_metric(), u, 0.0).unwrap();
    let eps = [0.0, 0.01, 0.02, 0.03, 0.02, 0.01, 0.0];
    let paths = geodesic_continuation(&g, (2, 1), [0.15, 0.05], &eps, &tight()).unwrap();
    let back = VariationField::difference(&paths[0], &paths[6], 1.0).unwrap().max_norm();
    assert!(back < 1e-8, "{back}");
    let there = VariationField::difference(&paths[0], &paths[3], 1.0).unwrap().max_norm();
    assert!(there > 1e-4);
}

/// `y'' = r`, `y(0) = y(1) = 0`, by the Green's function and Simpson's rule.
fn dirichlet_solve(r: impl Fn(f64) -> [f64; 2], t: f64) -> [f64; 2] {
    let simpson = |a: f64, b: f64, w: &dyn Fn(f64) -> f64, k: usize| -> f64 {
        if b - a <= 0.0 {
            return 0.0;
        }
        let panels = 2000;
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for i in 0..=panels {
            let s_i = a + h * i as f64;
            let c = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += c * w(s_i) * r(s_i)[k];
        }
        s * h / 3.0
    };
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let left = simpson(0.0, t, &|s| s, k);
        let right = simpson(t, 1.0, &|s| 1.0 - s, k);
        *o = -(1.0 - t) * left - t * right;
    }
    out
}

#[test]
fn first_order_variation_solves_the_jacobi_equation() {
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(30), 2, 0.5);
    let g = ConformalMetricF64::new(LiouvilleMetricF64::flat(), u.clone(), 0.0).unwrap();
    let a = [0.1, 0.3];
    let v = [1.0, 1.0];
    let fo = first_order(&g, (1, 1), a, 1e-3, &tight()).unwrap();
    // γ̈¹ = (|v|²/2)∇U − (∇U·v)v along γ⁰(t) = a + tv.
    let rhs = |t: f64| {
        let jet = u.jet([a[0] + t * v[0], a[1] + t * v[1]]);
        let gu = jet.grad;
        let vv = v[0] * v[0] + v[1] * v[1];
        let dv = gu[0] * v[0] + gu[1] * v[1];
        [0.5 * vv * gu[0] - dv * v[0], 0.5 * vv * gu[1] - dv * v[1]]
    };
    let mut worst: f64 = 0.0;
    for i in (0..=N).step_by(16) {
        let t = i as f64 / N as f64;
        let y = dirichlet_solve(rhs, t);
        let got = fo.gamma1.values()[i];
        worst = worst.max((got[0] - y[0]).hypot(got[1] - y[1]));
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn energy_expansion_is_third_order() {
    let m = base_metric();
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(41), 2, 0.5);
    let g = ConformalMetricF64::new(m.clone(), u.clone(), 0.0).unwrap();
    let a = [0.2, 0.45];
    let opts = tight();
    let fo = first_order(&g, (1, 1), a, 1e-3, &opts).unwrap();
    let e0 = energy(&m, &fo.base);
    let e1 = perturbation_energy(&u, &fo.base);
    let q = second_variation_energy(&m, &fo.base, &fo.gamma1, &fo.gamma1).unwrap();
    let eps = [1e-2, 5e-3, 2.5e-3];
    let paths = geodesic_continuation(&g, (1, 1), a, &eps, &opts).unwrap();
    let residual: Vec<f64> = eps
        .iter()
        .zip(&paths)
        .map(|(&e, p)| {
            let ee = energy(&g.with_epsilon(e).unwrap(), p);
            (ee - (e0 + e * e1 - 0.5 * e * e * q)).abs()
        })
        .collect();
    for w in residual.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 3.0).abs() < 0.2, "{residual:?}");
    }
}

#[test]
fn rigidity_of_the_zero_perturbation() {
    let r = rigidity_test(&base_metric(), &BivariateFunction::zero(), (1, 1), &RigidityOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Rigid);
    assert!(r.c.abs() < 1e-10);
    assert_eq!(r.second_order, Some(0.0));
    assert!(r.degenerate);
}

#[test]
fn scaling_the_metric_drifts_by_half_the_length() {
    let m = base_metric();
    let v = m.as_bivariate().unwrap();
    let r = rigidity_test(&m, &v, (2, 1), &RigidityOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Broken(RigidityStage::LengthDrift));
    for p in &r.points {
        assert!((p.length_drift - 0.5 * r.length).abs() < 1e-6);
    }
    assert!((r.c - 1.0).abs() < 1e-10);
    assert!(r.residual < 1e-10);
}

#[test]
fn xray_blind_perturbation_breaks_at_second_order() {
    // cos 2πx1 · cos 2πx2 integrates to zero along every horizontal line.
    let u = BivariateFunction::new(vec![Mode::new(1, 1, 1.0, 0.0, 0.0, 0.0)]).unwrap();
    let r = rigidity_test(&LiouvilleMetricF64::flat(), &u, (1, 0), &RigidityOptions::default()).unwrap();
    assert!(r.max_length_drift < 1e-12, "{}", r.max_length_drift);
    assert_eq!(r.verdict, Verdict::Broken(RigidityStage::SecondOrder));
    assert!(r.second_order.unwrap() > 1e-3);
    assert!(!r.degenerate);

    // The loop lengths themselves do not move to first order.
    let g = ConformalMetricF64::new(LiouvilleMetricF64::flat(), u, 0.0).unwrap();
    let opts = tight();
    for x in [[0.0, 0.1], [0.3, 0.37], [0.0, 0.5]] {
        let psi = |e: f64| loop_function(&g.with_epsilon(e).unwrap(), (1, 0), x, &opts.loops).unwrap().length;
        let e = 1e-4;
        assert!(((psi(e) - psi(-e)) / (2.0 * e)).abs() < 1e-6, "{x:?}");
    }
}

#[test]
fn random_perturbations_are_not_rigid() {
    let m = base_metric();
    let opts = RigidityOptions { base_points: 4, ..Default::default() };
    for seed in 0..4 {
        let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(100 + seed), 2, 0.3);
        let r = rigidity_test(&m, &u, (1, 1), &opts).unwrap();
        assert_ne!(r.verdict, Verdict::Rigid, "seed {seed}");
    }
}
