//! On-disk cache of computed Laplace spectra.
//!
//! Entries live in `$LIOUVILLE_CACHE_DIR` (default `<out>/cache`) under a
//! key derived from everything the eigenvalues depend on. Each key has a
//! lock file; holding an exclusive lock on it covers lookup, computation
//! and the store, so concurrent jobs compute an entry once.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use liouville_spectral::{LaplaceOptions, LaplaceSpectrum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CachePolicy;
use crate::error::JobError;

pub const CACHE_ENV: &str = "LIOUVILLE_CACHE_DIR";

/// Bumped whenever the solver or the entry layout changes.
const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SpectrumKey {
    pub metric: String,
    pub count: usize,
    pub grid: usize,
    pub residual_tolerance: f64,
    pub bump_tolerance: f64,
}

impl SpectrumKey {
    pub fn new(metric: &str, count: usize, opts: &LaplaceOptions) -> Self {
        Self {
            metric: metric.to_string(),
            count,
            grid: opts.grid,
            residual_tolerance: opts.residual_tolerance,
            bump_tolerance: opts.bump_tolerance,
        }
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(FORMAT.to_le_bytes());
        h.update(self.metric.as_bytes());
        for v in [self.count as u64, self.grid as u64, self.residual_tolerance.to_bits(), self.bump_tolerance.to_bits()]
        {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().take(16).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    format: u32,
    key: SpectrumKey,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    grid: Option<usize>,
    area: f64,
    density_bounds: (f64, f64),
    truncation: f64,
}

impl Entry {
    fn spectrum(self) -> LaplaceSpectrum {
        LaplaceSpectrum::new(
            self.eigenvalues,
            self.residuals,
            self.grid,
            self.area,
            self.density_bounds,
            self.truncation,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheStatus {
    Hit,
    Stored,
    Off,
}

pub fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| out.join("cache"))
}

fn load(path: &Path, key: &SpectrumKey) -> Option<LaplaceSpectrum> {
    let text = fs::read_to_string(path).ok()?;
    let e: Entry = serde_json::from_str(&text).ok()?;
    // A digest collision or a stale layout must not pass as a hit.
    (e.format == FORMAT && &e.key == key).then(|| e.spectrum())
}

fn store(dir: &Path, path: &Path, key: &SpectrumKey, s: &LaplaceSpectrum) -> Result<(), JobError> {
    let e = Entry {
        format: FORMAT,
        key: key.clone(),
        eigenvalues: s.eigenvalues.clone(),
        residuals: s.residuals.clone(),
        grid: s.grid,
        area: s.area,
        density_bounds: s.density_bounds,
        truncation: s.truncation,
    };
    let tmp = dir.join(format!(".{}.tmp", path.file_name().unwrap().to_string_lossy()));
    fs::write(&tmp, serde_json::to_vec(&e)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// The spectrum for `key`, from the cache or from `compute`.
pub fn spectrum<F>(
    dir: &Path,
    policy: CachePolicy,
    key: &SpectrumKey,
    compute: F,
) -> Result<(LaplaceSpectrum, CacheStatus), JobError>
where
    F: FnOnce() -> Result<LaplaceSpectrum, JobError>,
{
    if policy == CachePolicy::Off {
        return Ok((compute()?, CacheStatus::Off));
    }
    fs::create_dir_all(dir).map_err(|e| JobError::Io(format!("{}: {e}", dir.display())))?;
    let name = key.digest();
    let path = dir.join(format!("laplace-{name}.json"));
    let lock: File =
        OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(format!("laplace-{name}.lock")))?;
    lock.lock()?;
    if policy == CachePolicy::Use {
        if let Some(s) = load(&path, key) {
            return Ok((s, CacheStatus::Hit));
        }
    }
    let s = compute()?;
    store(dir, &path, key, &s)?;
    Ok((s, CacheStatus::Stored))
}
