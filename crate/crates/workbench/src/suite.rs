//! The acceptance suite behind `verify`.
//!
//! Reference values come from oracles written here. The flat checks count
//! lattice points by brute force; separable metrics are solved as two
//! coupled Hill problems.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use faer::{c64, Mat, Side};
use liouville_core::deformation::{
    energy, first_order, first_variation_energy, geodesic_continuation, geodesic_loop, perturbation_energy,
    rigidity_test, second_variation_energy, torus_geodesic, DeformationError, ParamPath, PathOptions, RigidityOptions,
    RigidityStage, VariationField, Verdict,
};
use liouville_core::dynamics::{
    find_rational_torus, flow, shoot_loop, DynamicsError, FlowOptions, GeodesicState, LoopOptions,
};
use liouville_core::lengths::{
    check_ncc, length_spectrum, length_spectrum_with, ncc_from_spectrum, rotational_length, two_rivers, LengthSpectrum,
    SpectrumOptions,
};
use liouville_core::metric::{
    random, BivariateFunction, Bump, ConformalMetric, Density, LiouvilleMetric, PeriodicFunction,
};
use liouville_spectral::{
    eigenvalues, heat_trace, lattice_spectrum, poisson_check, resolvent_probe, wave_trace, weyl_count, LaplaceOptions,
    LaplaceSpectrum, ResolventOptions, WaveTraceOptions,
};
use rand::Rng;

use crate::commands::{eigenvalue_deviation, entrywise_deviation};
use crate::config::Suite;

/// Checks whose failure is understood and recorded.
pub const KNOWN_GAPS: &[&str] = &["10b"];

const FOUR_PI2: f64 = 4.0 * PI * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Measured and reported without a verdict.
    Report,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub id: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    fn new(id: &'static str, passed: bool, detail: String) -> Self {
        Self { id, outcome: if passed { Outcome::Pass } else { Outcome::Fail }, detail }
    }

    fn report(id: &'static str, detail: String) -> Self {
        Self { id, outcome: Outcome::Report, detail }
    }

    fn timed(id: &'static str, t0: Instant, budget: f64) -> Self {
        let s = t0.elapsed().as_secs_f64();
        Self::new(id, s < budget, format!("{s:.2} s of {budget} s"))
    }

    pub fn is_known_gap(&self) -> bool {
        KNOWN_GAPS.contains(&self.id)
    }

    pub fn status(&self) -> &'static str {
        match self.outcome {
            Outcome::Pass => "pass",
            Outcome::Report => "report",
            Outcome::Fail if self.is_known_gap() => "known-gap",
            Outcome::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub number: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn unexpected_failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| c.status() == "fail").map(|c| c.id.to_string()).collect()
    }

    pub fn known_gap_failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| c.status() == "known-gap").map(|c| c.id.to_string()).collect()
    }

    pub fn status(&self) -> &'static str {
        if !self.unexpected_failures().is_empty() {
            "FAIL"
        } else if !self.known_gap_failures().is_empty() {
            "KNOWN-GAP"
        } else {
            "PASS"
        }
    }

    pub fn line(&self) -> String {
        let parts: Vec<String> = self.checks.iter().map(|c| format!("{} {}: {}", c.id, c.status(), c.detail)).collect();
        format!(
            "criterion {:>2} {:<9} {} ({:.1} s) [{}]",
            self.number,
            self.status(),
            self.title,
            self.seconds,
            parts.join("; ")
        )
    }
}

pub fn criteria(suite: Suite) -> Vec<u32> {
    match suite {
        Suite::All => (1..=13).collect(),
        Suite::Flat => vec![1, 4, 5, 7, 8, 9, 10],
    }
}

const TITLES: [&str; 13] = [
    "flat length spectrum",
    "rotational lengths against the flow",
    "loop function constancy",
    "noncoincidence condition",
    "flat eigenvalues",
    "separation oracle",
    "Weyl slope",
    "heat trace",
    "Poisson relation",
    "resolvent exponent",
    "variational identities",
    "rigidity pipeline",
    "two rivers",
];

/// Runs criterion `n`; the flat suite skips the checks on curved metrics.
pub fn run_criterion(n: u32, suite: Suite) -> CriterionReport {
    let full = suite == Suite::All;
    let t0 = Instant::now();
    let run = || -> Vec<Check> {
        match n {
            1 => flat_lengths(),
            2 => flow_lengths(),
            3 => loop_constancy(),
            4 => ncc(full),
            5 => flat_eigenvalues(),
            6 => separation(),
            7 => weyl(full),
            8 => heat(),
            9 => poisson(full),
            10 => resolvent(),
            11 => variational(),
            12 => rigidity(),
            13 => rivers(),
            _ => vec![Check::new("criterion", false, format!("no criterion {n}"))],
        }
    };
    let checks = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        vec![Check::new("panic", false, msg.unwrap_or_default())]
    });
    let title = TITLES.get(n.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
    CriterionReport { number: n, title, checks, seconds: t0.elapsed().as_secs_f64() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn fail(id: &'static str, e: impl std::fmt::Display) -> Check {
    Check::new(id, false, e.to_string())
}

macro_rules! attempt {
    ($id:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return vec![fail($id, e)],
        }
    };
}

// Oracles.

/// `|k|²` over `Z²` in ascending order, the first `count`.
fn lattice_norms(count: usize) -> Vec<i64> {
    let mut r = 8i64;
    loop {
        let mut v: Vec<i64> = (-r..=r).flat_map(|j| (-r..=r).map(move |k| j * j + k * k)).collect();
        v.sort_unstable();
        // Every norm below r² is complete inside the square.
        if v[count] < r * r {
            v.truncate(count);
            return v;
        }
        r *= 2;
    }
}

/// Lattice points with `0 < |k| ≤ cutoff`, grouped by `|k|²`.
fn lattice_shells(cutoff: f64) -> BTreeMap<i64, usize> {
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

/// `Σ_{n∈Z} e^{−4π²n²t}`.
fn theta(t: f64) -> f64 {
    1.0 + 2.0 * (1..200).map(|n| (-FOUR_PI2 * (n * n) as f64 * t).exp()).sum::<f64>()
}

/// `c_q` with `f = Σ c_q e^{2πiqx}`.
fn exp_coefficients(f: &PeriodicFunction<f64>) -> Vec<(i64, c64)> {
    let (a, b) = (f.cos_coeffs(), f.sin_coeffs());
    let mut out = vec![(0, c64::new(a[0], 0.0))];
    for k in 1..a.len().max(b.len() + 1) {
        let ak = a.get(k).copied().unwrap_or(0.0);
        let bk = b.get(k - 1).copied().unwrap_or(0.0);
        out.push((k as i64, c64::new(ak / 2.0, -bk / 2.0)));
        out.push((-(k as i64), c64::new(ak / 2.0, bk / 2.0)));
    }
    out
}

/// Sorted eigenvalues of the Hill operator `−d² − Λ(shift + f)` on the circle.
fn hill(coeffs: &[(i64, c64)], shift: f64, lambda: f64) -> Vec<f64> {
    const K: i64 = 24;
    let n = (2 * K + 1) as usize;
    let mut h = Mat::<c64>::zeros(n, n);
    for a in -K..=K {
        let i = (a + K) as usize;
        h[(i, i)] += c64::new(FOUR_PI2 * (a * a) as f64 - lambda * shift, 0.0);
        for &(q, c) in coeffs {
            let b = a - q;
            if b.abs() <= K {
                h[(i, (b + K) as usize)] -= c * lambda;
            }
        }
    }
    h.self_adjoint_eigenvalues(Side::Lower).expect("Hill matrix is Hermitian")
}

/// Eigenvalues of `1 + f1 + f2` by separation: `−X″ − Λf1X = μX` and
/// `−Y″ − Λ(1 + f2)Y = −μY`. Each pair `(i, j)` of branches contributes the
/// root of `μ_i(Λ) + ν_j(Λ)`, which decreases strictly in `Λ`.
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

// Shared metrics.

fn band_limited(seed: u64) -> LiouvilleMetric<f64> {
    random::liouville(&mut random::seeded(seed), 3, 0.1)
}

/// Even in both variables; cosines and sines decouple in the solver.
fn even_metric() -> LiouvilleMetric<f64> {
    LiouvilleMetric::new(
        PeriodicFunction::new(vec![0.0, 0.1, 0.03], vec![]).unwrap(),
        PeriodicFunction::new(vec![0.0, -0.06, 0.0, 0.04], vec![]).unwrap(),
    )
    .unwrap()
}

/// Depends on `x1` only, so the solver splits it into small blocks.
fn one_profile() -> LiouvilleMetric<f64> {
    LiouvilleMetric::new(PeriodicFunction::new(vec![0.0, 0.1, 0.03], vec![0.02]).unwrap(), PeriodicFunction::zero())
        .unwrap()
}

pub fn river_profile() -> PeriodicFunction<f64> {
    PeriodicFunction::bump(Bump::new(0.15, 0.12, 0.1)).unwrap()
}

const CLASSES: [(i64, i64); 3] = [(1, 1), (2, 1), (1, 3)];

/// `ψ(x)` by Newton shooting from a launch angle and flow time displaced
/// from the torus values, so the solver has to find the loop itself.
fn shot_length(m: &LiouvilleMetric<f64>, class: (i64, i64), x: [f64; 2]) -> Result<f64, DynamicsError> {
    let t = find_rational_torus(m, class)?;
    let seed = (t.angle(m, x) + 2e-3, t.period * (1.0 + 1e-3));
    Ok(shoot_loop(m, class, x, seed, &LoopOptions::default())?.length)
}

// Criteria.

fn flat_lengths() -> Vec<Check> {
    let t0 = Instant::now();
    let s = attempt!("1a", length_spectrum(&LiouvilleMetric::<f64>::flat(), 5.1));
    let time = Check::timed("1b", t0, 1.0);
    let want = lattice_shells(5.1);
    let mut got: BTreeMap<i64, usize> = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for e in &s.entries {
        let q = e.class.0 * e.class.0 + e.class.1 * e.class.1;
        worst = worst.max((e.length - (q as f64).sqrt()).abs());
        *got.entry(q).or_insert(0) += e.multiplicity;
    }
    vec![
        Check::new("1a", got == want && worst < 1e-10, format!("{} classes, max error {worst:.1e}", s.entries.len())),
        time,
    ]
}

fn flow_lengths() -> Vec<Check> {
    let t0 = Instant::now();
    let (mut flow_gap, mut shoot_gap): (f64, f64) = (0.0, 0.0);
    let x = [0.3, 0.1];
    for seed in 1..=3 {
        let m = band_limited(seed);
        for class in CLASSES {
            let l = attempt!("2a", rotational_length(&m, class)).length;
            let t = attempt!("2a", find_rational_torus(&m, class));
            let s0 = GeodesicState::new(x, t.covector(&m, x));
            let q = attempt!("2a", flow(&m, &s0, l, &FlowOptions::default())).state.lifted();
            flow_gap = flow_gap.max((q[0] - x[0] - class.0 as f64).hypot(q[1] - x[1] - class.1 as f64));
            let shot = attempt!("2b", shot_length(&m, class, x));
            shoot_gap = shoot_gap.max((shot - l).abs());
        }
    }
    vec![
        Check::new("2a", flow_gap < 1e-7, format!("flow closes within {flow_gap:.1e}")),
        Check::new("2b", shoot_gap < 1e-7, format!("shooting length within {shoot_gap:.1e}")),
        Check::timed("2c", t0, 30.0),
    ]
}

fn loop_constancy() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    for seed in 1..=3 {
        let m = band_limited(seed);
        let mut rng = random::seeded(30 + seed);
        let mut values = Vec::new();
        for _ in 0..20 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            values.push(attempt!("3", shot_length(&m, (1, 1), x)));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
    }
    vec![Check::new("3", worst < 1e-8, format!("spread {worst:.1e}"))]
}

fn ncc(full: bool) -> Vec<Check> {
    let r = attempt!("4a", check_ncc(&LiouvilleMetric::<f64>::flat(), 6.0));
    let witness = r.witnesses.iter().any(|c| {
        let (m, n) = c.rotational.class;
        let (a, b) = c.oscillatory.class;
        (m.abs().min(n.abs()), m.abs().max(n.abs())) == (3, 4) && a * b == 0 && a.abs() + b.abs() == 5
    });
    let mut out = vec![Check::new(
        "4a",
        !r.holds && witness,
        format!("{} witnesses, (3,4)/(0,5) {}", r.witnesses.len(), if witness { "found" } else { "missing" }),
    )];
    if full {
        let m = random::liouville::<f64, _>(&mut random::seeded(2024), 5, 0.05);
        let r = attempt!("4b", check_ncc(&m, 6.0));
        out.push(Check::new("4b", r.holds, format!("{} witnesses, {} warnings", r.witnesses.len(), r.warnings.len())));
    }
    out
}

fn grid(n: usize) -> LaplaceOptions {
    LaplaceOptions { grid: n, ..Default::default() }
}

fn cluster_sizes(norms: &[i64]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, q) in norms.iter().enumerate() {
        if i > 0 && norms[i - 1] == *q {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
    }
    out
}

fn flat_eigenvalues() -> Vec<Check> {
    let t0 = Instant::now();
    let s = attempt!("5a", eigenvalues(&LiouvilleMetric::flat().into(), 50, &grid(64)));
    let time = Check::timed("5b", t0, 10.0);
    let want = lattice_norms(50);
    let worst = s.eigenvalues.iter().zip(&want).map(|(a, &n)| rel(*a, FOUR_PI2 * n as f64)).fold(0.0, f64::max);
    let shells = s.cluster_sizes() == cluster_sizes(&want);
    vec![
        Check::new(
            "5a",
            worst < 1e-8 && shells,
            format!("max relative error {worst:.1e}, multiplicities {}", if shells { "match" } else { "differ" }),
        ),
        time,
    ]
}

fn separation() -> Vec<Check> {
    let m = LiouvilleMetric::new(
        PeriodicFunction::new(vec![0.0, 0.1, 0.0], vec![0.03, -0.04]).unwrap(),
        PeriodicFunction::new(vec![0.02, -0.08], vec![0.05]).unwrap(),
    )
    .unwrap();
    let want = separation_oracle(&m, 20);
    let s = attempt!("6", eigenvalues(&m.into(), 20, &grid(48)));
    let worst = s.eigenvalues.iter().zip(&want).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    vec![Check::new("6", worst < 1e-6, format!("max relative error {worst:.1e}"))]
}

fn weyl_check(id: &'static str, s: &LaplaceSpectrum) -> Check {
    let w = weyl_count(s, s.max_eigenvalue().sqrt());
    let dev = (w.slope / w.expected_slope - 1.0).abs();
    Check::new(id, dev < 0.03, format!("slope off by {:.2}%", 100.0 * dev))
}

fn weyl(full: bool) -> Vec<Check> {
    let t0 = Instant::now();
    let mut out = vec![weyl_check("7a", &lattice_spectrum(2000, 1.0))];
    if full {
        let opts = LaplaceOptions { grid: 96, residual_tolerance: 1e-5, ..Default::default() };
        let s = attempt!("7b", eigenvalues(&even_metric().into(), 2000, &opts));
        out.push(weyl_check("7b", &s));
    }
    out.push(Check::timed("7c", t0, 300.0));
    out
}

fn heat() -> Vec<Check> {
    let s = attempt!("8a", eigenvalues(&LiouvilleMetric::flat().into(), 1024, &grid(64)));
    let mut worst: f64 = 0.0;
    for t in [0.05, 0.1] {
        let h = attempt!("8a", heat_trace(&s, t));
        worst = worst.max(rel(h.value, theta(t) * theta(t)));
    }
    let h = attempt!("8b", heat_trace(&lattice_spectrum(20000, 1.0), 0.01));
    let dev = (h.scaled() * 4.0 * PI - 1.0).abs();
    vec![
        Check::new("8a", worst < 1e-8, format!("max relative error {worst:.1e}")),
        Check::new("8b", dev < 0.01, format!("t·Tr off by {:.2}%", 100.0 * dev)),
    ]
}

fn poisson(full: bool) -> Vec<Check> {
    let sigma = 0.03;
    let flat = lattice_spectrum(10_000, 1.0);
    let w = attempt!("9a", wave_trace(&flat, &WaveTraceOptions::new(3.0, sigma)));
    let lengths = attempt!("9a", length_spectrum(&LiouvilleMetric::<f64>::flat(), 3.2));
    let mut out = Vec::new();
    match poisson_check(&w, &lengths) {
        Ok(_) => {
            let missing: Vec<f64> = [1.0, 2f64.sqrt(), 2.0]
                .into_iter()
                .filter(|l| !w.peaks.iter().any(|p| (p.time - l).abs() <= 2.0 * sigma))
                .collect();
            out.push(Check::new("9a", missing.is_empty(), format!("{} peaks, missing {missing:?}", w.peaks.len())));
        }
        Err(e) => out.push(fail("9a", e)),
    }
    if full {
        out.push(liouville_poisson(sigma));
    }
    out
}

fn liouville_poisson(sigma: f64) -> Check {
    let m = one_profile();
    let lengths = match length_spectrum(&m, 4.3) {
        Ok(l) => l,
        Err(e) => return fail("9b", e),
    };
    if !ncc_from_spectrum(&lengths).holds {
        return Check::new("9b", false, "noncoincidence fails on [0, 4.3]".into());
    }
    let opts = LaplaceOptions { grid: 128, residual_tolerance: 1e-5, ..Default::default() };
    let s = match eigenvalues(&m.into(), 3600, &opts) {
        Ok(s) => s,
        Err(e) => return fail("9b", e),
    };
    let w = match wave_trace(&s, &WaveTraceOptions::new(4.0 + 2.0 * sigma, sigma)) {
        Ok(w) => w,
        Err(e) => return fail("9b", e),
    };
    let minimal: Vec<f64> =
        lengths.minimal_rotational().map(|e| e.length).filter(|l| *l > 3.0 * sigma && *l <= 4.0).collect();
    let missed = minimal.iter().filter(|l| !w.peaks.iter().any(|p| (p.time - *l).abs() <= 2.0 * sigma)).count();
    Check::new("9b", missed == 0, format!("{} of {} minimal lengths detected", minimal.len() - missed, minimal.len()))
}

fn resolvent() -> Vec<Check> {
    let t0 = Instant::now();
    let s = lattice_spectrum(60_000, 1.0);
    let band = (50.0, 600.0);
    let at = attempt!("10a", resolvent_probe(&s, &ResolventOptions::new(1.0, 0.05, band)));
    let gap = attempt!("10b", resolvent_probe(&s, &ResolventOptions::new(1.2, 0.05, band)));
    vec![
        Check::new(
            "10a",
            (at.exponent - 0.5).abs() <= 0.15,
            format!("exponent {:.3} ± {:.3}", at.exponent, at.half_width),
        ),
        Check::new("10b", gap.exponent < 0.0, format!("exponent {:.3} ± {:.3}", gap.exponent, gap.half_width)),
        Check::timed("10c", t0, 120.0),
    ]
}

fn random_field<R: Rng>(rng: &mut R, intervals: usize, terms: usize) -> VariationField<f64> {
    let coeffs: Vec<[f64; 2]> = (0..terms)
        .map(|k| {
            let s = 1.0 / (1.0 + k as f64);
            [rng.random_range(-s..=s), rng.random_range(-s..=s)]
        })
        .collect();
    VariationField::sine_series(intervals, &coeffs).unwrap()
}

/// Largest `|dE(δ)|` over 50 random fields.
fn max_first_variation<D: Density<f64>, R: Rng>(
    g: &D,
    p: &ParamPath<f64>,
    rng: &mut R,
) -> Result<f64, DeformationError> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = random_field(rng, p.intervals(), 8);
        worst = worst.max(first_variation_energy(g, p, &d)?.abs());
    }
    Ok(worst)
}

fn variational() -> Vec<Check> {
    let m: LiouvilleMetric<f64> = random::liouville(&mut random::seeded(11), 3, 0.15);
    let mut rng = random::seeded(9);
    let (mut e_err, mut de_max, mut d2_min): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for class in CLASSES {
        let torus = attempt!("11a", find_rational_torus(&m, class));
        let p = attempt!("11a", torus_geodesic(&m, &torus, [0.1, 0.2], &PathOptions::default()));
        let l2 = torus.length * torus.length;
        e_err = e_err.max((energy(&m, &p) - l2).abs() / l2);
        de_max = de_max.max(attempt!("11b", max_first_variation(&m, &p, &mut rng)));
        for _ in 0..50 {
            let d = random_field(&mut rng, p.intervals(), 8);
            d2_min = d2_min.min(attempt!("11c", second_variation_energy(&m, &p, &d, &d)));
        }
    }
    // A closed geodesic of a non-Liouville metric.
    let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(3), 2, 0.3);
    let g = attempt!("11a", ConformalMetric::new(m.clone(), u, 0.02));
    let mut tight = PathOptions::default();
    tight.loops.tolerance = 1e-13;
    let (p, sol) = attempt!("11a", geodesic_loop(&g, (1, 1), [0.3, 0.1], &tight));
    let l2 = sol.length * sol.length;
    e_err = e_err.max((energy(&g, &p) - l2).abs() / l2);
    de_max = de_max.max(attempt!("11b", max_first_variation(&g, &p, &mut rng)));

    vec![
        Check::new("11a", e_err < 1e-9, format!("|E − L²|/L² ≤ {e_err:.1e}")),
        Check::new("11b", de_max < 1e-7, format!("|dE| ≤ {de_max:.1e}")),
        Check::new("11c", d2_min >= -1e-8, format!("min d²E {d2_min:.3e}")),
        expansion(&m, &tight),
    ]
}

/// Residual of the second-order energy expansion along a family of loops.
fn expansion(m: &LiouvilleMetric<f64>, opts: &PathOptions<f64>) -> Check {
    let run = || -> Result<Vec<f64>, String> {
        let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(41), 2, 0.5);
        let g = ConformalMetric::new(m.clone(), u.clone(), 0.0).map_err(|e| e.to_string())?;
        let a = [0.2, 0.45];
        let fo = first_order(&g, (1, 1), a, 1e-3, opts).map_err(|e| e.to_string())?;
        let e0 = energy(m, &fo.base);
        let e1 = perturbation_energy(&u, &fo.base);
        let q = second_variation_energy(m, &fo.base, &fo.gamma1, &fo.gamma1).map_err(|e| e.to_string())?;
        let eps = [1e-2, 5e-3, 2.5e-3];
        let paths = geodesic_continuation(&g, (1, 1), a, &eps, opts).map_err(|e| e.to_string())?;
        eps.iter()
            .zip(&paths)
            .map(|(&e, p)| {
                let ge = g.with_epsilon(e).map_err(|e| e.to_string())?;
                Ok((energy(&ge, p) - (e0 + e * e1 - 0.5 * e * e * q)).abs())
            })
            .collect()
    };
    match run() {
        Ok(r) => {
            let slopes: Vec<f64> = r.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            let ok = slopes.iter().all(|s| (s - 3.0).abs() < 0.2);
            Check::new("11d", ok, format!("log-log slopes {slopes:.2?}"))
        }
        Err(e) => fail("11d", e),
    }
}

fn rigidity() -> Vec<Check> {
    let t0 = Instant::now();
    let m: LiouvilleMetric<f64> = random::liouville(&mut random::seeded(11), 3, 0.15);
    let r = attempt!("12a", rigidity_test(&m, &BivariateFunction::zero(), (1, 1), &RigidityOptions::default()));
    let a = Check::new(
        "12a",
        r.verdict == Verdict::Rigid && r.c.abs() <= 1e-10,
        format!("verdict {:?}, c = {:.1e}", r.verdict, r.c),
    );
    let v = attempt!("12b", m.as_bivariate());
    let r = attempt!("12b", rigidity_test(&m, &v, (2, 1), &RigidityOptions::default()));
    let drift = r.points.iter().map(|p| (p.length_drift - 0.5 * r.length).abs()).fold(0.0, f64::max);
    let b = Check::new(
        "12b",
        r.verdict == Verdict::Broken(RigidityStage::LengthDrift) && drift <= 1e-6,
        format!("verdict {:?}, |dℓ/dε − L/2| ≤ {drift:.1e}", r.verdict),
    );
    let opts = RigidityOptions { base_points: 4, ..Default::default() };
    let mut false_rigid = Vec::new();
    for i in 0..20 {
        let u: BivariateFunction<f64> = random::perturbation(&mut random::seeded(100 + i), 2, 0.3);
        let r = attempt!("12c", rigidity_test(&m, &u, (1, 1), &opts));
        if r.verdict == Verdict::Rigid {
            false_rigid.push(i);
        }
    }
    vec![
        a,
        b,
        Check::new("12c", false_rigid.is_empty(), format!("{} of 20 random U judged rigid", false_rigid.len())),
        Check::timed("12d", t0, 300.0),
    ]
}

fn rivers() -> Vec<Check> {
    let f = river_profile();
    let offsets = [0.35, 0.5, 0.65];
    let metrics: Vec<LiouvilleMetric<f64>> =
        attempt!("13a", offsets.iter().map(|&c| two_rivers(&f, c)).collect::<Result<_, _>>());
    let spectra: Vec<LengthSpectrum<f64>> = attempt!(
        "13a",
        metrics.iter().map(|m| length_spectrum_with(m, 5.0, &SpectrumOptions::default())).collect::<Result<_, _>>()
    );
    let a = match entrywise_deviation(&spectra) {
        Some(d) => Check::new("13a", d <= 1e-8, format!("{} entries, max deviation {d:.1e}", spectra[0].entries.len())),
        None => Check::new("13a", false, "entries do not pair up".into()),
    };
    let opts = LaplaceOptions { grid: 320, residual_tolerance: 1e-8, bump_tolerance: 1e-4 };
    let pair: Vec<LaplaceSpectrum> = attempt!(
        "13b",
        metrics[..2].iter().map(|m| eigenvalues(&m.clone().into(), 200, &opts)).collect::<Result<_, _>>()
    );
    let (dev, at, bound) = eigenvalue_deviation(&pair[0], &pair[1]);
    let b = Check::report(
        "13b",
        format!("first 200 eigenvalues for c = 0.35, 0.5 differ by up to {dev:.2e} (relative, index {at}); truncation uncertainty {bound:.1e}"),
    );
    vec![a, b]
}
