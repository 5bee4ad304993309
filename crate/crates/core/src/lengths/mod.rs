//! Length spectra of Liouville metrics from the separated period integrals.

mod oscillatory;
mod rivers;
mod rotational;

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::metric::{LiouvilleMetric, MetricError};
use crate::quadrature::QuadratureError;
use crate::scalar::Real;

pub use oscillatory::{oscillatory_lengths, AxisScan, OscillatoryLengths, OscillatoryOptions};
pub use rivers::two_rivers;
pub use rotational::rotational_length;

/// Entries of one class closer than this are merged.
pub const DEDUP_TOLERANCE: f64 = 1e-9;
/// Coincidence tolerance of the noncoincidence check.
pub const NCC_TOLERANCE: f64 = 1e-8;
/// Near-coincidences below this are reported as warnings.
pub const NCC_WARNING: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LengthError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("river supports overlap: {0}")]
    OverlappingRivers(String),
    #[error("river profile must be a nonnegative sum of bumps")]
    NotCompactlySupported,
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LengthKind {
    Rotational,
    /// Closed geodesic on a critical circle of a profile.
    OscillatoryCritical,
    /// Oscillation inside a component of `{e + f > 0}`.
    OscillatoryLibrating,
}

impl LengthKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LengthKind::Rotational => "rotational",
            LengthKind::OscillatoryCritical => "oscillatory-critical",
            LengthKind::OscillatoryLibrating => "oscillatory-librating",
        }
    }

    pub fn is_oscillatory(&self) -> bool {
        !matches!(self, LengthKind::Rotational)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthEntry<T> {
    pub length: T,
    pub class: (i64, i64),
    pub kind: LengthKind,
    pub e: Option<T>,
    pub n_osc: Option<u32>,
    /// Interval of the oscillating coordinate: the critical locus for
    /// critical entries, `(x⁻, x⁺)` for librating ones.
    pub component: Option<(T, T)>,
    pub multiplicity: usize,
}

impl<T: Real> LengthEntry<T> {
    fn with_class(&self, class: (i64, i64)) -> Self {
        Self { class, ..self.clone() }
    }

    /// Same entry on the metric with `x1 ↔ x2` exchanged.
    pub fn transposed(&self) -> Self {
        let mut e = self.clone();
        e.class = (self.class.1, self.class.0);
        if self.kind == LengthKind::Rotational {
            e.e = self.e.map(|v| T::one() - v);
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthSpectrum<T> {
    /// Sorted by length, then class, then kind.
    pub entries: Vec<LengthEntry<T>>,
    pub cutoff: T,
    pub fingerprint: String,
}

impl<T: Real> LengthSpectrum<T> {
    /// One length per rotational class.
    pub fn minimal_rotational(&self) -> impl Iterator<Item = &LengthEntry<T>> {
        self.entries.iter().filter(|e| e.kind == LengthKind::Rotational)
    }

    pub fn oscillatory(&self) -> impl Iterator<Item = &LengthEntry<T>> {
        self.entries.iter().filter(|e| e.kind.is_oscillatory())
    }

    /// Distinct lengths (merged at the dedup tolerance), ascending.
    pub fn distinct_lengths(&self) -> Vec<T> {
        let mut v: Vec<T> = self.entries.iter().map(|e| e.length).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() <= T::lit(DEDUP_TOLERANCE));
        v
    }
}

pub(crate) fn entry_order<T: Real>(a: &LengthEntry<T>, b: &LengthEntry<T>) -> Ordering {
    a.length
        .partial_cmp(&b.length)
        .unwrap_or(Ordering::Equal)
        .then(a.class.cmp(&b.class))
        .then(a.kind.cmp(&b.kind))
        .then(a.n_osc.cmp(&b.n_osc))
}

/// Merges entries of the same class, kind and oscillation count whose
/// lengths agree to the dedup tolerance.
pub(crate) fn dedup<T: Real>(mut entries: Vec<LengthEntry<T>>) -> Vec<LengthEntry<T>> {
    entries.sort_by(|a, b| {
        a.class
            .cmp(&b.class)
            .then(a.kind.cmp(&b.kind))
            .then(a.n_osc.cmp(&b.n_osc))
            .then(a.length.partial_cmp(&b.length).unwrap_or(Ordering::Equal))
    });
    let mut out: Vec<LengthEntry<T>> = Vec::with_capacity(entries.len());
    for e in entries {
        if let Some(last) = out.last_mut() {
            if last.class == e.class
                && last.kind == e.kind
                && last.n_osc == e.n_osc
                && (last.length - e.length).abs() <= T::lit(DEDUP_TOLERANCE)
            {
                last.multiplicity += e.multiplicity;
                continue;
            }
        }
        out.push(e);
    }
    out
}

fn signed_classes(m: i64, n: i64) -> Vec<(i64, i64)> {
    let mut v = Vec::with_capacity(4);
    for sm in if m == 0 { vec![0] } else { vec![m, -m] } {
        for sn in if n == 0 { vec![0] } else { vec![n, -n] } {
            v.push((sm, sn));
        }
    }
    v
}

/// Largest winding `r` with `r·√(min ρ) ≤ cutoff`: every closed curve of
/// Euclidean length `r` has Riemannian length at least `r·√(min ρ)`.
fn winding_bound<T: Real>(metric: &LiouvilleMetric<T>, cutoff: T) -> T {
    cutoff / metric.min_density().sqrt() * (T::one() + T::lit(1e-12))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SpectrumOptions {
    pub oscillatory: OscillatoryOptions,
}

pub fn length_spectrum<T: Real>(metric: &LiouvilleMetric<T>, cutoff: T) -> Result<LengthSpectrum<T>, LengthError> {
    length_spectrum_with(metric, cutoff, &SpectrumOptions::default())
}

pub fn length_spectrum_with<T: Real>(
    metric: &LiouvilleMetric<T>,
    cutoff: T,
    opts: &SpectrumOptions,
) -> Result<LengthSpectrum<T>, LengthError> {
    if !(cutoff > T::zero()) {
        return Err(LengthError::InvalidInput("cutoff must be positive".into()));
    }
    let swapped = metric.swapped();
    let r = winding_bound(metric, cutoff);
    let r_max = r.floor().to_i64().unwrap_or(0);
    let limit = cutoff * (T::one() + T::lit(1e-12));

    let mut classes = Vec::new();
    for m in 1..=r_max {
        for n in 1..=r_max {
            if T::from_int(m * m + n * n).sqrt() <= r {
                classes.push((m, n));
            }
        }
    }
    let rotational: Result<Vec<Option<LengthEntry<T>>>, LengthError> = classes
        .par_iter()
        .map(|&c| {
            let e = rotational::rotational_entry(metric, &swapped, c)?;
            Ok(if e.length <= limit { Some(e) } else { None })
        })
        .collect();
    let mut entries = Vec::new();
    for e in rotational?.into_iter().flatten() {
        for c in signed_classes(e.class.0, e.class.1) {
            entries.push(e.with_class(c));
        }
    }

    // Vertical classes (0, k) oscillate in x1; horizontal ones via the swap.
    let k_max = r_max.max(0) as usize;
    if k_max > 0 {
        let vertical = AxisScan::new(metric.f1(), metric.f2(), &opts.oscillatory)?.lengths(k_max, cutoff)?;
        let horizontal = AxisScan::new(swapped.f1(), swapped.f2(), &opts.oscillatory)?.lengths(k_max, cutoff)?;
        for e in vertical {
            for c in signed_classes(0, e.class.1) {
                entries.push(e.with_class(c));
            }
        }
        for e in horizontal {
            let t = e.transposed();
            for c in signed_classes(t.class.0, 0) {
                entries.push(t.with_class(c));
            }
        }
    }
    let mut entries = dedup(entries);
    entries.sort_by(entry_order);
    Ok(LengthSpectrum { entries, cutoff, fingerprint: metric.fingerprint() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coincidence<T> {
    pub rotational: LengthEntry<T>,
    pub oscillatory: LengthEntry<T>,
    pub gap: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NccReport<T> {
    pub holds: bool,
    pub cutoff: T,
    /// Coincidences within the NCC tolerance.
    pub witnesses: Vec<Coincidence<T>>,
    /// Near-coincidences between the NCC tolerance and the warning level.
    pub warnings: Vec<Coincidence<T>>,
}

/// Noncoincidence of minimal rotational and oscillatory lengths on `[0, cutoff]`.
pub fn check_ncc<T: Real>(metric: &LiouvilleMetric<T>, cutoff: T) -> Result<NccReport<T>, LengthError> {
    let spec = length_spectrum(metric, cutoff)?;
    Ok(ncc_from_spectrum(&spec))
}

pub fn ncc_from_spectrum<T: Real>(spec: &LengthSpectrum<T>) -> NccReport<T> {
    let first_quadrant = |e: &&LengthEntry<T>| e.class.0 >= 0 && e.class.1 >= 0;
    let rot: Vec<&LengthEntry<T>> = spec.minimal_rotational().filter(first_quadrant).collect();
    let osc: Vec<&LengthEntry<T>> = spec.oscillatory().filter(first_quadrant).collect();
    let mut witnesses = Vec::new();
    let mut warnings = Vec::new();
    for r in &rot {
        for o in &osc {
            let gap = (r.length - o.length).abs();
            let c = || Coincidence { rotational: (*r).clone(), oscillatory: (*o).clone(), gap };
            if gap < T::lit(NCC_TOLERANCE) {
                witnesses.push(c());
            } else if gap < T::lit(NCC_WARNING) {
                warnings.push(c());
            }
        }
    }
    NccReport { holds: witnesses.is_empty(), cutoff: spec.cutoff, witnesses, warnings }
}
