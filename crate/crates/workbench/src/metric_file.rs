//! Metric files. See `docs/file-format.md` for the schema.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use liouville_core::metric::{
    BivariateFunction, Bump, ConformalMetric, LiouvilleMetric, MetricError, Mode, PeriodicFunction,
};
use serde::Deserialize;

/// Degree of the series fitted to sampled profiles.
pub const SAMPLE_DEGREE: usize = 16;

/// Samples must be reproduced by the fitted series to this, relative to
/// their largest magnitude (at least 1).
pub const SAMPLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricFileError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for MetricFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for MetricFileError {}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
    #[serde(default)]
    bumps: Vec<BumpDoc>,
    samples: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpDoc {
    center: f64,
    half_width: f64,
    height: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeDoc {
    j: usize,
    k: usize,
    #[serde(default)]
    cc: f64,
    #[serde(default)]
    cs: f64,
    #[serde(default)]
    sc: f64,
    #[serde(default)]
    ss: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationDoc {
    modes: Vec<ModeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricDoc {
    f1: Option<ProfileDoc>,
    f2: Option<ProfileDoc>,
    #[serde(rename = "U")]
    u: Option<PerturbationDoc>,
    epsilon: Option<f64>,
}

/// Position of the `n`-th (0-based) occurrence of `"key"` after the first
/// occurrence of each key in `path`, as 1-based line and column.
fn locate(text: &str, path: &[&str], nth: usize) -> (usize, usize) {
    let mut at = 0;
    let mut found = None;
    for (i, key) in path.iter().enumerate() {
        let needle = format!("\"{key}\"");
        let skip = if i + 1 == path.len() { nth } else { 0 };
        let mut from = at;
        let mut hit = None;
        for _ in 0..=skip {
            match text[from..].find(&needle) {
                Some(p) => {
                    hit = Some(from + p);
                    from = from + p + needle.len();
                }
                None => {
                    hit = None;
                    break;
                }
            }
        }
        match hit {
            Some(p) => {
                at = p;
                found = Some(p);
            }
            None => break,
        }
    }
    let p = found.unwrap_or(0);
    let line = text[..p].matches('\n').count() + 1;
    let column = p - text[..p].rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn error_at(text: &str, path: &[&str], nth: usize, message: String) -> MetricFileError {
    let (line, column) = locate(text, path, nth);
    MetricFileError { line, column, message }
}

/// Degree-`K` least-squares fit (the DFT) of equispaced samples `f(i/n)`.
fn fit_samples(v: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64), String> {
    let n = v.len();
    if n < 3 {
        return Err(format!("{n} samples; at least 3 are needed"));
    }
    let k = SAMPLE_DEGREE.min((n - 1) / 2);
    let mut cos = vec![v.iter().sum::<f64>() / n as f64];
    let mut sin = Vec::new();
    for q in 1..=k {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, y) in v.iter().enumerate() {
            let (s, c) = (TAU * (q * i) as f64 / n as f64).sin_cos();
            a += y * c;
            b += y * s;
        }
        cos.push(2.0 * a / n as f64);
        sin.push(2.0 * b / n as f64);
    }
    let f = PeriodicFunction::new(cos.clone(), sin.clone()).map_err(|e| e.to_string())?;
    let err = v.iter().enumerate().map(|(i, y)| (f.eval(i as f64 / n as f64) - y).abs()).fold(0.0, f64::max);
    Ok((cos, sin, err))
}

fn profile(text: &str, name: &str, doc: Option<ProfileDoc>) -> Result<PeriodicFunction<f64>, MetricFileError> {
    let Some(doc) = doc else { return Ok(PeriodicFunction::zero()) };
    let (cos, sin) = match doc.samples {
        Some(v) => {
            if !doc.cos.is_empty() || !doc.sin.is_empty() {
                return Err(error_at(text, &[name, "samples"], 0, "samples cannot be combined with cos or sin".into()));
            }
            let (cos, sin, err) = fit_samples(&v).map_err(|m| error_at(text, &[name, "samples"], 0, m))?;
            let scale = v.iter().fold(1.0f64, |m, y| m.max(y.abs()));
            if !(err <= SAMPLE_TOLERANCE * scale) {
                return Err(error_at(
                    text,
                    &[name, "samples"],
                    0,
                    format!(
                        "samples are not a smooth periodic function of degree {}: the fitted series misses them by {err:.3e}",
                        SAMPLE_DEGREE.min((v.len() - 1) / 2)
                    ),
                ));
            }
            (cos, sin)
        }
        None => (doc.cos, doc.sin),
    };
    let bumps: Vec<Bump<f64>> = doc.bumps.iter().map(|b| Bump::new(b.center, b.half_width, b.height)).collect();
    PeriodicFunction::with_bumps(cos, sin, bumps).map_err(|e| {
        let path: Vec<&str> = match &e {
            MetricError::InvalidBump { .. } => vec![name, "bumps"],
            _ => vec![name],
        };
        error_at(text, &path, 0, format!("{name}: {e}"))
    })
}

/// Parses a metric document, reporting problems with their position.
pub fn parse_metric(text: &str) -> Result<ConformalMetric<f64>, MetricFileError> {
    let doc: MetricDoc = serde_json::from_str(text).map_err(|e| MetricFileError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let f1 = profile(text, "f1", doc.f1)?;
    let f2 = profile(text, "f2", doc.f2)?;
    let first_profile = if text.contains("\"f1\"") { "f1" } else { "f2" };
    let base = LiouvilleMetric::new(f1, f2).map_err(|e| error_at(text, &[first_profile], 0, e.to_string()))?;
    let modes: Vec<Mode<f64>> = doc
        .u
        .map(|u| u.modes.into_iter().map(|m| Mode::new(m.j, m.k, m.cc, m.cs, m.sc, m.ss)).collect())
        .unwrap_or_default();
    let u = BivariateFunction::new(modes.clone()).map_err(|e| {
        let nth = match &e {
            MetricError::DuplicateMode { j, k } => {
                modes.iter().enumerate().filter(|(_, m)| m.j == *j && m.k == *k).nth(1).map(|p| p.0)
            }
            MetricError::ModeTooHigh { j, k, .. } => modes.iter().position(|m| m.j == *j && m.k == *k),
            _ => None,
        };
        match nth {
            Some(i) => error_at(text, &["U", "j"], i, format!("U: {e}")),
            None => error_at(text, &["U"], 0, format!("U: {e}")),
        }
    })?;
    let epsilon = doc.epsilon.unwrap_or(0.0);
    let at = if text.contains("\"epsilon\"") { "epsilon" } else { "U" };
    ConformalMetric::new(base, u, epsilon).map_err(|e| error_at(text, &[at], 0, e.to_string()))
}

pub fn read_metric(path: &Path) -> Result<ConformalMetric<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_metric(&text).map_err(|e| format!("{}: {e}", path.display()))
}
