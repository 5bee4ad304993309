use std::f64::consts::TAU;
use std::sync::OnceLock;

use liouville_core::lengths::{length_spectrum, ncc_from_spectrum, LengthKind, LengthSpectrum};
use liouville_core::metric::{LiouvilleMetric, PeriodicFunction};
use liouville_spectral::resolvent::{resolvent_value, window_clearance};
use liouville_spectral::wave::{wave_trace_phased, DEFAULT_ETA};
use liouville_spectral::{
    detect_peaks, eigenvalues, lattice_spectrum, poisson_check, resolvent_probe, wave_trace, LaplaceOptions,
    LaplaceSpectrum, ResolventOptions, SpectralError, WaveTraceOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat() -> &'static LaplaceSpectrum {
    static S: OnceLock<LaplaceSpectrum> = OnceLock::new();
    S.get_or_init(|| lattice_spectrum(10_000, 1.0))
}

fn flat_lengths(cutoff: f64) -> LengthSpectrum<f64> {
    length_spectrum(&LiouvilleMetric::flat(), cutoff).unwrap()
}

/// Depends on `x1` only, so the solver splits it into small blocks.
fn one_profile() -> LiouvilleMetric<f64> {
    LiouvilleMetric::new(PeriodicFunction::new(vec![0.0, 0.1, 0.03], vec![0.02]).unwrap(), PeriodicFunction::zero())
        .unwrap()
}

fn one_profile_spectrum() -> &'static LaplaceSpectrum {
    static S: OnceLock<LaplaceSpectrum> = OnceLock::new();
    S.get_or_init(|| {
        let opts = LaplaceOptions { grid: 128, residual_tolerance: 1e-5, ..Default::default() };
        eigenvalues(&one_profile().into(), 3600, &opts).unwrap()
    })
}

#[test]
fn flat_trace_peaks_at_lattice_lengths() {
    let sigma = 0.03;
    let w = wave_trace(flat(), &WaveTraceOptions::new(3.0, sigma)).unwrap();
    let w0: f64 = flat().eigenvalues.iter().map(|v| (-0.5 * sigma * sigma * v).exp()).sum();
    assert_eq!(w.values[0], w0);
    let r = poisson_check(&w, &flat_lengths(3.2)).unwrap();
    assert!(r.unmatched_peaks.is_empty() && r.unmatched_lengths.is_empty());
    // Each singularity shows as a pair of lobes of |w| around its length.
    let mut first: Vec<f64> = r.matched.iter().map(|m| m.1).collect();
    first.dedup();
    for (a, b) in first.iter().zip([1.0, 2f64.sqrt(), 2.0]) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    for (t, l) in &r.matched {
        assert!((t - l).abs() <= 2.0 * sigma);
    }
    assert_eq!(detect_peaks(&w, DEFAULT_ETA), w.peaks);
}

#[test]
fn halving_the_window_keeps_the_peaks() {
    let coarse = wave_trace(flat(), &WaveTraceOptions::new(2.5, 0.04)).unwrap();
    let fine = wave_trace(flat(), &WaveTraceOptions::new(2.5, 0.02)).unwrap();
    assert!(!coarse.peaks.is_empty());
    for p in &coarse.peaks {
        let near = fine.peaks.iter().map(|q| (q.time - p.time).abs()).fold(f64::INFINITY, f64::min);
        assert!(near < 0.04, "peak at {} moved by {near}", p.time);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_even(t in 0.0f64..10.0) {
        let s = lattice_spectrum(300, 1.0);
        let w = wave_trace(&s, &WaveTraceOptions::new(0.5, 0.2)).unwrap();
        prop_assert_eq!(w.value_at(t), w.value_at(-t));
    }
}

#[test]
fn shuffled_phases_give_no_peaks() {
    let opts = WaveTraceOptions::new(3.0, 0.03);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut clean = 0;
    for _ in 0..100 {
        let phases: Vec<f64> = (0..flat().len()).map(|_| rng.random_range(0.0..TAU)).collect();
        if wave_trace_phased(flat(), &phases, &opts).unwrap().peaks.is_empty() {
            clean += 1;
        }
    }
    assert!(clean >= 90, "{clean} of 100 shuffles clean");
}

#[test]
fn missing_lengths_leave_unmatched_peaks() {
    let w = wave_trace(flat(), &WaveTraceOptions::new(3.0, 0.03)).unwrap();
    let mut lengths = flat_lengths(3.2);
    lengths.entries.retain(|e| (e.length - 2f64.sqrt()).abs() > 1e-6);
    let err = poisson_check(&w, &lengths).unwrap_err();
    let SpectralError::UnmatchedPeak { time } = err else { panic!("{err:?}") };
    assert!((time - 2f64.sqrt()).abs() < 0.06);
}

#[test]
fn liouville_minimal_lengths_are_detected() {
    let lengths = length_spectrum(&one_profile(), 4.3).unwrap();
    assert!(ncc_from_spectrum(&lengths).holds);
    let sigma = 0.03;
    let w = wave_trace(one_profile_spectrum(), &WaveTraceOptions::new(4.0 + 2.0 * sigma, sigma)).unwrap();
    let r = poisson_check(&w, &lengths).unwrap();
    let minimal: Vec<f64> =
        lengths.minimal_rotational().map(|e| e.length).filter(|l| *l > 3.0 * sigma && *l <= 4.0).collect();
    assert!(minimal.len() > 10);
    for l in minimal {
        assert!(w.peaks.iter().any(|p| (p.time - l).abs() <= 2.0 * sigma), "no peak near {l}");
    }
    assert!(r.matched.len() == w.peaks.len());
}

#[test]
fn flat_resolvent_grows_like_the_square_root() {
    let s = lattice_spectrum(60_000, 1.0);
    let p = resolvent_probe(&s, &ResolventOptions::new(1.0, 0.05, (50.0, 600.0))).unwrap();
    assert!((p.exponent - 0.5).abs() < 0.15, "{} ± {}", p.exponent, p.half_width);
    assert!(p.shells.len() >= 10);
    // I(λ) is a window of the trace seen through its Fourier transform; at
    // λ = 0 it is Σ_j 2ĝ(λ_j)cos(Lλ_j).
    let direct: f64 =
        s.frequencies().iter().map(|f| 2.0 * (-0.5 * 0.05f64.powi(2) * f * f).exp() * (1.0 * f).cos()).sum();
    let at_zero = resolvent_value(&s.frequencies(), 1.0, 0.05, 0.0);
    assert!((at_zero.re - direct).abs() < 1e-9 * direct.abs().max(1.0) && at_zero.im.abs() < 1e-9);
}

#[test]
fn narrow_window_between_lengths_decays() {
    // With s = 0.03 the Gaussian tails at the neighbouring lengths 1 and √2
    // are below e^{-22}.
    let s = lattice_spectrum(60_000, 1.0);
    let lengths = flat_lengths(2.0).distinct_lengths();
    window_clearance(&lengths, 1.2, 0.03).unwrap();
    let p = resolvent_probe(&s, &ResolventOptions::new(1.2, 0.03, (50.0, 600.0))).unwrap();
    assert!(p.exponent < 0.0, "{} ± {}", p.exponent, p.half_width);
}

#[test]
fn liouville_resolvent_grows_at_a_length_and_decays_between() {
    let spec = one_profile_spectrum();
    let lengths = length_spectrum(&one_profile(), 3.0).unwrap();
    let l11 = lengths.entries.iter().find(|e| e.class == (1, 1) && e.kind == LengthKind::Rotational).unwrap().length;
    let band = (20.0, spec.max_eigenvalue().sqrt() - 80.0);
    let at = resolvent_probe(spec, &ResolventOptions::new(l11, 0.1, band)).unwrap();
    assert!(at.exponent > 0.0, "{} ± {}", at.exponent, at.half_width);
    let gap = resolvent_probe(spec, &ResolventOptions::new(0.5, 0.1, band)).unwrap();
    assert!(gap.exponent < 0.0, "{} ± {}", gap.exponent, gap.half_width);
}

#[test]
fn coarse_windows_are_refused() {
    let s = lattice_spectrum(100, 1.0);
    let top = s.max_eigenvalue().sqrt();
    assert!(matches!(
        wave_trace(&s, &WaveTraceOptions::new(1.0, 2.0 / top)),
        Err(SpectralError::ResolutionDishonest { .. })
    ));
    assert!(wave_trace(&s, &WaveTraceOptions::new(1.0, 3.0 / top)).is_ok());
}
