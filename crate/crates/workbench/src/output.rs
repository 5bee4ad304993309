//! Result directories `out/<subcommand>/<fingerprint>/`, CSV tables and
//! `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Job;
use crate::error::JobError;

/// Numbers are written with 17 significant digits, enough to round-trip.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sixteen hex digits of SHA-256 over the job's identity: subcommand,
/// metric fingerprint, resolved parameters and seed.
pub fn job_fingerprint(job: &Job, metric: Option<&str>, resolved: &Value) -> String {
    let identity = serde_json::json!({
        "command": job.command.name(),
        "metric": metric,
        "params": resolved,
        "seed": job.seed,
    });
    let digest = Sha256::digest(identity.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub struct OutputDir {
    path: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str, fingerprint: &str) -> Result<Self, JobError> {
        let path = root.join(command).join(fingerprint);
        fs::create_dir_all(&path).map_err(|e| JobError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self { path, files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), JobError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let file = self.path.join(name);
        let mut w = csv::Writer::from_path(&file)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `summary.json`; the listed files are added under `"files"`.
    pub fn summary<S: Serialize>(&self, summary: &S) -> Result<(), JobError> {
        let mut v = serde_json::to_value(summary)?;
        if let Value::Object(m) = &mut v {
            m.insert("files".into(), self.files.clone().into());
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        fs::write(self.path.join("summary.json"), text)?;
        Ok(())
    }
}
