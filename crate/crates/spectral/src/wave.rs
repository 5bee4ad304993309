//! The smoothed wave trace `w_σ(t) = Σ_j cos(tλ_j) e^{-σ²Λ_j/2}`, its peaks,
//! and their comparison with a length spectrum.

use liouville_core::lengths::{ncc_from_spectrum, LengthSpectrum};

use crate::spectrum::LaplaceSpectrum;
use crate::SpectralError;

/// Default prominence threshold, in multiples of the median of `|w_σ|`.
pub const DEFAULT_ETA: f64 = 5.0;

#[derive(Clone, Copy, Debug)]
pub struct WaveTraceOptions {
    pub t_max: f64,
    pub dt: f64,
    pub sigma: f64,
    pub eta: f64,
}

impl WaveTraceOptions {
    /// Grid step `σ/10`.
    pub fn new(t_max: f64, sigma: f64) -> Self {
        Self { t_max, dt: sigma / 10.0, sigma, eta: DEFAULT_ETA }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub time: f64,
    /// `|w_σ|` at the peak.
    pub height: f64,
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveTrace {
    /// `t_i = i·δt`, `0 ≤ t_i ≤ t_max`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
    /// Eigenvalues used.
    pub count: usize,
    /// Prominence a peak must exceed.
    pub threshold: f64,
    pub peaks: Vec<Peak>,
    frequencies: Vec<f64>,
    weights: Vec<f64>,
    phases: Option<Vec<f64>>,
}

impl WaveTrace {
    /// `w_σ(t)` at any `t`, from the same terms as the grid values.
    pub fn value_at(&self, t: f64) -> f64 {
        sum_at(&self.frequencies, &self.weights, self.phases.as_deref(), t)
    }
}

fn sum_at(freqs: &[f64], weights: &[f64], phases: Option<&[f64]>, t: f64) -> f64 {
    match phases {
        None => freqs.iter().zip(weights).map(|(l, w)| (t * l).cos() * w).sum(),
        Some(p) => freqs.iter().zip(weights).zip(p).map(|((l, w), p)| (t * l + p).cos() * w).sum(),
    }
}

fn synthesize(
    spec: &LaplaceSpectrum,
    phases: Option<Vec<f64>>,
    opts: &WaveTraceOptions,
) -> Result<WaveTrace, SpectralError> {
    let freqs = spec.frequencies();
    let top = freqs.last().copied().unwrap_or(0.0);
    if !(top > 0.0) || opts.sigma < 3.0 / top {
        return Err(SpectralError::ResolutionDishonest { sigma: opts.sigma, minimum: 3.0 / top });
    }
    if !(opts.dt > 0.0) || !(opts.t_max > 0.0) {
        return Err(SpectralError::InvalidInput("wave trace needs dt > 0 and t_max > 0".into()));
    }
    let weights: Vec<f64> = spec.eigenvalues.iter().map(|v| (-0.5 * opts.sigma * opts.sigma * v).exp()).collect();
    let n = (opts.t_max / opts.dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * opts.dt).collect();
    let values: Vec<f64> = times.iter().map(|&t| sum_at(&freqs, &weights, phases.as_deref(), t)).collect();
    let mut trace = WaveTrace {
        times,
        values,
        sigma: opts.sigma,
        count: spec.len(),
        threshold: 0.0,
        peaks: Vec::new(),
        frequencies: freqs,
        weights,
        phases,
    };
    let (peaks, threshold) = find_peaks(&trace, opts.eta);
    trace.peaks = peaks;
    trace.threshold = threshold;
    Ok(trace)
}

pub fn wave_trace(spec: &LaplaceSpectrum, opts: &WaveTraceOptions) -> Result<WaveTrace, SpectralError> {
    synthesize(spec, None, opts)
}

/// The trace with each term's phase shifted, `Σ_j cos(tλ_j + φ_j) e^{-σ²Λ_j/2}`.
pub fn wave_trace_phased(
    spec: &LaplaceSpectrum,
    phases: &[f64],
    opts: &WaveTraceOptions,
) -> Result<WaveTrace, SpectralError> {
    if phases.len() != spec.len() {
        return Err(SpectralError::InvalidInput(format!("{} phases for {} eigenvalues", phases.len(), spec.len())));
    }
    synthesize(spec, Some(phases.to_vec()), opts)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn find_peaks(trace: &WaveTrace, eta: f64) -> (Vec<Peak>, f64) {
    let start = trace.times.partition_point(|&t| t <= 3.0 * trace.sigma);
    let a: Vec<f64> = trace.values[start..].iter().map(|v| v.abs()).collect();
    let threshold = eta * median(a.clone());
    let mut peaks = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if !(a[i] > a[i - 1] && a[i] >= a[i + 1]) {
            continue;
        }
        // Topographic prominence: the higher of the two lowest points
        // reached before climbing above the peak on either side.
        let mut left = a[i];
        for j in (0..i).rev() {
            if a[j] > a[i] {
                break;
            }
            left = left.min(a[j]);
        }
        let mut right = a[i];
        for &v in &a[i + 1..] {
            if v > a[i] {
                break;
            }
            right = right.min(v);
        }
        let prominence = a[i] - left.max(right);
        if prominence > threshold {
            peaks.push(Peak { time: trace.times[start + i], height: a[i], prominence });
        }
    }
    (peaks, threshold)
}

/// Peaks of `|w_σ|` beyond `3σ` whose prominence exceeds `η·median|w_σ|`.
pub fn detect_peaks(trace: &WaveTrace, eta: f64) -> Vec<Peak> {
    find_peaks(trace, eta).0
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonReport {
    /// `(peak time, nearest length)` within `2σ`.
    pub matched: Vec<(f64, f64)>,
    pub unmatched_peaks: Vec<f64>,
    /// Lengths in the window without a peak; cancellation is possible.
    pub unmatched_lengths: Vec<f64>,
    /// Minimal rotational lengths without a peak.
    pub missing_minimal: Vec<f64>,
    /// Whether the length spectrum satisfies the noncoincidence condition.
    pub ncc: bool,
    /// Lengths in `(3σ, t_max − 2σ]` are expected to show.
    pub window: (f64, f64),
}

impl PoissonReport {
    /// Unmatched peaks are errors; so are missing minimal lengths under NCC.
    pub fn verify(&self) -> Result<(), SpectralError> {
        if let Some(&t) = self.unmatched_peaks.first() {
            return Err(SpectralError::UnmatchedPeak { time: t });
        }
        if self.ncc {
            if let Some(&l) = self.missing_minimal.first() {
                return Err(SpectralError::MissingMinimalLength { length: l });
            }
        }
        Ok(())
    }
}

pub fn poisson_report(trace: &WaveTrace, lengths: &LengthSpectrum<f64>) -> Result<PoissonReport, SpectralError> {
    let t_max = trace.times.last().copied().unwrap_or(0.0);
    let tol = 2.0 * trace.sigma;
    if lengths.cutoff + tol < t_max {
        return Err(SpectralError::InvalidInput(format!(
            "length cutoff {} does not cover the trace up to {t_max}",
            lengths.cutoff
        )));
    }
    let distinct = lengths.distinct_lengths();
    let nearest = |t: f64| {
        distinct.iter().copied().min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs())).filter(|l| (l - t).abs() <= tol)
    };
    let mut matched = Vec::new();
    let mut unmatched_peaks = Vec::new();
    for p in &trace.peaks {
        match nearest(p.time) {
            Some(l) => matched.push((p.time, l)),
            None => unmatched_peaks.push(p.time),
        }
    }
    let window = (3.0 * trace.sigma, t_max - tol);
    let seen = |l: f64| trace.peaks.iter().any(|p| (p.time - l).abs() <= tol);
    let in_window = |l: f64| l > window.0 && l <= window.1;
    let unmatched_lengths = distinct.iter().copied().filter(|&l| in_window(l) && !seen(l)).collect();
    let mut missing_minimal: Vec<f64> =
        lengths.minimal_rotational().map(|e| e.length).filter(|&l| in_window(l) && !seen(l)).collect();
    missing_minimal.dedup();
    Ok(PoissonReport {
        matched,
        unmatched_peaks,
        unmatched_lengths,
        missing_minimal,
        ncc: ncc_from_spectrum(lengths).holds,
        window,
    })
}

/// The report, failing on an unmatched peak or, under NCC, a missing
/// minimal length.
pub fn poisson_check(trace: &WaveTrace, lengths: &LengthSpectrum<f64>) -> Result<PoissonReport, SpectralError> {
    let r = poisson_report(trace, lengths)?;
    r.verify()?;
    Ok(r)
}
