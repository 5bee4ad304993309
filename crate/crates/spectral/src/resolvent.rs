//! The regularized resolvent trace
//! `I(λ) = Σ_j [ĝ(λ−λ_j)e^{iL(λ−λ_j)} + ĝ(λ+λ_j)e^{iL(λ+λ_j)}]`
//! with `ĝ(ω) = exp(−s²ω²/2)`, and the growth exponent of `|I|`.

use num_complex::Complex64;

use crate::spectrum::LaplaceSpectrum;
use crate::SpectralError;

/// Terms with `|λ ∓ λ_j| > REACH/s` are dropped; `ĝ` is below `e^{-32}` there.
pub const REACH: f64 = 8.0;

/// Fewest shells an exponent is fitted on.
pub const MIN_SHELLS: usize = 10;

#[derive(Clone, Copy, Debug)]
pub struct ResolventOptions {
    /// Window center `L`.
    pub length: f64,
    /// Window width `s`, the time-domain standard deviation.
    pub width: f64,
    pub band: (f64, f64),
    /// `λ` grid step.
    pub step: f64,
}

impl ResolventOptions {
    pub fn new(length: f64, width: f64, band: (f64, f64)) -> Self {
        Self { length, width, band, step: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolventProbe {
    pub length: f64,
    pub width: f64,
    pub lambdas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `(λ, max|I|)` at the maximum of each shell of width `1/s`.
    pub shells: Vec<(f64, f64)>,
    /// Least-squares slope of `log max|I|` against `log λ`.
    pub exponent: f64,
    /// Twice the standard error of the slope.
    pub half_width: f64,
}

/// `I(λ)` at one point, over the sorted frequencies.
pub fn resolvent_value(freqs: &[f64], length: f64, width: f64, lambda: f64) -> Complex64 {
    let reach = REACH / width;
    let lo = freqs.partition_point(|&f| f < lambda - reach);
    let hi = freqs.partition_point(|&f| f <= lambda + reach);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut add = |w: f64| {
        let g = (-0.5 * width * width * w * w).exp();
        let (s, c) = (length * w).sin_cos();
        sum += Complex64::new(g * c, g * s);
    };
    for &f in &freqs[lo..hi] {
        add(lambda - f);
    }
    let hi = freqs.partition_point(|&f| f <= reach - lambda);
    for &f in &freqs[..hi] {
        add(lambda + f);
    }
    sum
}

pub fn resolvent_probe(spec: &LaplaceSpectrum, opts: &ResolventOptions) -> Result<ResolventProbe, SpectralError> {
    let (a, b) = opts.band;
    let s = opts.width;
    if !(s > 0.0 && opts.step > 0.0 && a > 0.0 && b > a) {
        return Err(SpectralError::InvalidInput(format!(
            "probe needs s > 0, step > 0 and 0 < band start < band end, got s = {s}, band = [{a}, {b}]"
        )));
    }
    let freqs = spec.frequencies();
    let top = freqs.last().copied().unwrap_or(0.0);
    if b + REACH / s > top {
        return Err(SpectralError::BandOutsideSpectrum { band_end: b, reach: REACH / s, top });
    }
    let shell = 1.0 / s;
    let count = ((b - a) / shell).floor() as usize;
    if count < MIN_SHELLS {
        return Err(SpectralError::BandTooShort { shells: count, required: MIN_SHELLS });
    }
    let n = ((b - a) / opts.step + 1e-9).floor() as usize;
    let lambdas: Vec<f64> = (0..=n).map(|i| a + i as f64 * opts.step).collect();
    let values: Vec<Complex64> = lambdas.iter().map(|&l| resolvent_value(&freqs, opts.length, s, l)).collect();
    let mut shells: Vec<(f64, f64)> = vec![(0.0, -1.0); count];
    for (l, v) in lambdas.iter().zip(&values) {
        let i = ((l - a) / shell).floor() as usize;
        if i < count && v.norm() > shells[i].1 {
            shells[i] = (*l, v.norm());
        }
    }
    let pts: Vec<(f64, f64)> = shells.iter().map(|&(l, m)| (l.ln(), m.max(f64::MIN_POSITIVE).ln())).collect();
    let (exponent, half_width) = fit_line(&pts);
    Ok(ResolventProbe { length: opts.length, width: s, lambdas, values, shells, exponent, half_width })
}

/// Slope and twice its standard error.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, 2.0 * (ssr / (n - 2.0) / sxx).sqrt())
}

/// Lengths must lie either inside `[L−s, L+s]` or at least `4s` from `L`,
/// leaving a gap of `3s` around the window.
pub fn window_clearance(lengths: &[f64], length: f64, width: f64) -> Result<(), SpectralError> {
    let slack = 1e-12 * (1.0 + length);
    for &l in lengths {
        let d = (l - length).abs();
        if d > width + slack && d < 4.0 * width - slack {
            return Err(SpectralError::WindowNotClear { length: l, center: length, width });
        }
    }
    Ok(())
}
