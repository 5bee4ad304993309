//! The subcommands.

use std::f64::consts::TAU;
use std::path::PathBuf;

use liouville_core::deformation::{rigidity_test, RigidityOptions, Verdict};
use liouville_core::lengths::{
    length_spectrum_with, ncc_from_spectrum, two_rivers, LengthEntry, LengthSpectrum, NccReport, OscillatoryOptions,
    SpectrumOptions,
};
use liouville_core::metric::{random, ConformalMetric, LiouvilleMetric};
use liouville_spectral::resolvent::{window_clearance, REACH};
use liouville_spectral::wave::wave_trace_phased;
use liouville_spectral::{
    eigenvalues, lattice_spectrum, poisson_report, resolvent_probe, wave_trace, weyl_count, LaplaceOptions,
    LaplaceSpectrum, ResolventOptions, WaveTraceOptions,
};
use rand::Rng;
use serde_json::{json, Value};

use crate::cache::{self, SpectrumKey};
use crate::config::{
    Job, LaplaceParams, LspecParams, ProbeParams, RigidityParams, RiversParams, Source, Suite, VerifyParams, WaveParams,
};
use crate::error::JobError;
use crate::metric_file::read_metric;
use crate::output::{job_fingerprint, num, OutputDir};
use crate::suite;

/// What a finished job leaves behind.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    /// A failed check that still produced artifacts.
    pub failure: Option<JobError>,
}

pub fn run(job: &Job) -> Result<Outcome, JobError> {
    use crate::config::CommandKind::*;
    match job.command {
        Lspec => lspec(job),
        Laplace => laplace(job),
        Wavetrace => wavetrace(job),
        Probe => probe(job),
        Rigidity => rigidity(job),
        TwoRivers => rivers(job),
        Verify => verify(job),
    }
}

struct LoadedMetric {
    metric: ConformalMetric<f64>,
    fingerprint: String,
    path: String,
}

fn load_metric(job: &Job) -> Result<LoadedMetric, JobError> {
    let path =
        job.metric.as_ref().ok_or_else(|| JobError::validation(format!("`{}` needs --metric", job.command.name())))?;
    let metric = read_metric(path).map_err(JobError::Validation)?;
    let fingerprint = metric.fingerprint();
    Ok(LoadedMetric { metric, fingerprint, path: path.display().to_string() })
}

fn liouville(m: &LoadedMetric, what: &str) -> Result<LiouvilleMetric<f64>, JobError> {
    if m.metric.is_liouville() {
        Ok(m.metric.base().clone())
    } else {
        Err(JobError::validation(format!("{what} needs a Liouville metric (no U or epsilon = 0)")))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn positive(name: &str, x: f64) -> Result<f64, JobError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(JobError::validation(format!("{name} must be positive, got {x}")))
    }
}

fn scan_options(points: usize) -> Result<SpectrumOptions, JobError> {
    if points < 100 {
        return Err(JobError::validation(format!("scan_points must be at least 100, got {points}")));
    }
    Ok(SpectrumOptions { oscillatory: OscillatoryOptions { grid_points: points, ..Default::default() } })
}

fn length_rows(entries: &[LengthEntry<f64>]) -> Vec<Vec<String>> {
    entries
        .iter()
        .map(|e| {
            vec![
                num(e.length),
                e.class.0.to_string(),
                e.class.1.to_string(),
                e.kind.as_str().to_string(),
                opt(e.e),
                e.n_osc.map(|n| n.to_string()).unwrap_or_default(),
                e.multiplicity.to_string(),
                opt(e.component.map(|c| c.0)),
                opt(e.component.map(|c| c.1)),
            ]
        })
        .collect()
}

const LENGTH_HEADER: [&str; 9] =
    ["length", "m", "n", "kind", "e", "n_osc", "multiplicity", "component_start", "component_end"];

fn ncc_summary(r: &NccReport<f64>) -> Value {
    let pair = |c: &liouville_core::lengths::Coincidence<f64>| {
        json!({
            "rotational_class": [c.rotational.class.0, c.rotational.class.1],
            "oscillatory_class": [c.oscillatory.class.0, c.oscillatory.class.1],
            "length": c.rotational.length,
            "gap": c.gap,
        })
    };
    json!({
        "holds": r.holds,
        "cutoff": r.cutoff,
        "witnesses": r.witnesses.iter().map(pair).collect::<Vec<_>>(),
        "warnings": r.warnings.iter().map(pair).collect::<Vec<_>>(),
    })
}

fn lspec(job: &Job) -> Result<Outcome, JobError> {
    let p: LspecParams = job.params()?;
    let m = load_metric(job)?;
    let base = liouville(&m, "lspec")?;
    let cutoff = positive("max_length", p.max_length.unwrap_or(5.0))?;
    let scan = p.scan_points.unwrap_or(OscillatoryOptions::default().grid_points);
    let resolved = json!({ "max_length": cutoff, "scan_points": scan });
    let spec = length_spectrum_with(&base, cutoff, &scan_options(scan)?)?;
    let ncc = ncc_from_spectrum(&spec);
    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    out.csv("lengths.csv", &LENGTH_HEADER, length_rows(&spec.entries))?;
    let rows = ncc.witnesses.iter().map(|c| ("witness", c)).chain(ncc.warnings.iter().map(|c| ("warning", c))).map(
        |(level, c)| {
            vec![
                level.to_string(),
                num(c.rotational.length),
                format!("{},{}", c.rotational.class.0, c.rotational.class.1),
                format!("{},{}", c.oscillatory.class.0, c.oscillatory.class.1),
                c.oscillatory.kind.as_str().to_string(),
                num(c.gap),
            ]
        },
    );
    out.csv("ncc.csv", &["level", "length", "rotational_class", "oscillatory_class", "oscillatory_kind", "gap"], rows)?;
    out.summary(&json!({
        "command": "lspec",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "entries": spec.entries.len(),
        "distinct_lengths": spec.distinct_lengths().len(),
        "ncc": ncc_summary(&ncc),
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure: None })
}

struct SpectrumSettings {
    source: Source,
    count: usize,
    opts: LaplaceOptions,
}

impl SpectrumSettings {
    fn resolved(&self) -> Value {
        match self.source {
            Source::Lattice => json!({ "spectrum": "lattice", "count": self.count }),
            Source::Computed => json!({
                "spectrum": "computed",
                "count": self.count,
                "grid": self.opts.grid,
                "residual_tolerance": self.opts.residual_tolerance,
                "bump_tolerance": self.opts.bump_tolerance,
            }),
        }
    }
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut x), Value::Object(y)) => {
            x.extend(y);
            Value::Object(x)
        }
        _ => unreachable!("both sides are objects"),
    }
}

fn acquire(job: &Job, m: &LoadedMetric, s: &SpectrumSettings) -> Result<LaplaceSpectrum, JobError> {
    match s.source {
        Source::Lattice => {
            let g = &m.metric;
            if !(g.is_liouville() && g.base().is_flat()) {
                return Err(JobError::validation("lattice spectra need a constant density"));
            }
            Ok(lattice_spectrum(s.count, g.area()))
        }
        Source::Computed => {
            let key = SpectrumKey::new(&m.fingerprint, s.count, &s.opts);
            let (spec, status) = cache::spectrum(&cache::cache_dir(&job.out), job.cache, &key, || {
                Ok(eigenvalues(&m.metric, s.count, &s.opts)?)
            })?;
            eprintln!("eigenvalue cache: {}", serde_json::to_string(&status)?.trim_matches('"'));
            Ok(spec)
        }
    }
}

fn eigenvalue_rows(s: &LaplaceSpectrum) -> impl Iterator<Item = Vec<String>> + '_ {
    s.eigenvalues.iter().enumerate().map(|(i, v)| {
        vec![i.to_string(), num(*v), num(v.max(0.0).sqrt()), s.clusters[i].to_string(), num(s.residuals[i])]
    })
}

fn laplace(job: &Job) -> Result<Outcome, JobError> {
    let p: LaplaceParams = job.params()?;
    let m = load_metric(job)?;
    let defaults = LaplaceOptions::default();
    let s = SpectrumSettings {
        source: Source::Computed,
        count: p.count.unwrap_or(200),
        opts: LaplaceOptions {
            grid: p.grid.unwrap_or(defaults.grid),
            residual_tolerance: p.residual_tolerance.unwrap_or(defaults.residual_tolerance),
            bump_tolerance: p.bump_tolerance.unwrap_or(defaults.bump_tolerance),
        },
    };
    let resolved = s.resolved();
    let spec = acquire(job, &m, &s)?;
    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    out.csv("eigenvalues.csv", &["index", "Lambda", "lambda", "cluster", "residual"], eigenvalue_rows(&spec))?;
    let w = weyl_count(&spec, spec.max_eigenvalue().sqrt());
    out.summary(&json!({
        "command": "laplace",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "area": spec.area,
        "density_bounds": [spec.density_bounds.0, spec.density_bounds.1],
        "truncation": spec.truncation,
        "max_residual": spec.residuals.iter().copied().fold(0.0, f64::max),
        "largest_eigenvalue": spec.max_eigenvalue(),
        "clusters": spec.cluster_sizes().len(),
        "weyl": { "slope": w.slope, "expected_slope": w.expected_slope },
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure: None })
}

fn settings(
    source: Option<Source>,
    count: Option<usize>,
    grid: Option<usize>,
    residual: Option<f64>,
    bump: Option<f64>,
    defaults: (usize, usize),
) -> SpectrumSettings {
    SpectrumSettings {
        source: source.unwrap_or(Source::Computed),
        count: count.unwrap_or(defaults.0),
        opts: LaplaceOptions {
            grid: grid.unwrap_or(defaults.1),
            residual_tolerance: residual.unwrap_or(1e-5),
            bump_tolerance: bump.unwrap_or(LaplaceOptions::default().bump_tolerance),
        },
    }
}

fn wavetrace(job: &Job) -> Result<Outcome, JobError> {
    let p: WaveParams = job.params()?;
    let m = load_metric(job)?;
    let s = settings(p.spectrum, p.count, p.grid, p.residual_tolerance, p.bump_tolerance, (2000, 96));
    let sigma = positive("sigma", p.sigma.unwrap_or(0.03))?;
    let opts = WaveTraceOptions {
        t_max: positive("t_max", p.t_max.unwrap_or(4.0))?,
        dt: positive("dt", p.dt.unwrap_or(sigma / 10.0))?,
        sigma,
        eta: positive("eta", p.eta.unwrap_or(liouville_spectral::wave::DEFAULT_ETA))?,
    };
    let draws = p.null_draws.unwrap_or(0);
    let resolved = merge(
        s.resolved(),
        json!({ "sigma": opts.sigma, "t_max": opts.t_max, "dt": opts.dt, "eta": opts.eta, "null_draws": draws }),
    );
    let spec = acquire(job, &m, &s)?;
    let w = wave_trace(&spec, &opts)?;
    let report = match m.metric.is_liouville() {
        true => {
            let lengths = length_spectrum_with(m.metric.base(), opts.t_max, &SpectrumOptions::default())?;
            Some(poisson_report(&w, &lengths)?)
        }
        false => None,
    };
    let null_control = if draws > 0 {
        let mut rng = random::seeded(job.seed);
        let mut clean = 0;
        for _ in 0..draws {
            let phases: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(0.0..TAU)).collect();
            if wave_trace_phased(&spec, &phases, &opts)?.peaks.is_empty() {
                clean += 1;
            }
        }
        Some(json!({ "draws": draws, "clean": clean }))
    } else {
        None
    };
    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    out.csv("trace.csv", &["t", "w"], w.times.iter().zip(&w.values).map(|(t, v)| vec![num(*t), num(*v)]))?;
    let matched = |t: f64| report.as_ref().and_then(|r| r.matched.iter().find(|x| x.0 == t).map(|x| x.1));
    out.csv(
        "peaks.csv",
        &["time", "height", "prominence", "length"],
        w.peaks.iter().map(|pk| vec![num(pk.time), num(pk.height), num(pk.prominence), opt(matched(pk.time))]),
    )?;
    let failure = report.as_ref().and_then(|r| r.verify().err()).map(JobError::from);
    out.summary(&json!({
        "command": "wavetrace",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "eigenvalues": spec.len(),
        "threshold": w.threshold,
        "peaks": w.peaks.len(),
        "poisson": report.as_ref().map(|r| json!({
            "window": [r.window.0, r.window.1],
            "matched": r.matched.len(),
            "unmatched_peaks": r.unmatched_peaks,
            "unmatched_lengths": r.unmatched_lengths,
            "missing_minimal": r.missing_minimal,
            "ncc": r.ncc,
            "passed": failure.is_none(),
        })),
        "null_control": null_control,
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure })
}

fn probe(job: &Job) -> Result<Outcome, JobError> {
    let p: ProbeParams = job.params()?;
    let m = load_metric(job)?;
    let s = settings(p.spectrum, p.count, p.grid, p.residual_tolerance, p.bump_tolerance, (3600, 128));
    let length = positive("length", p.length.ok_or_else(|| JobError::validation("probe needs --length"))?)?;
    let width = positive("width", p.width.unwrap_or(0.1))?;
    if m.metric.is_liouville() {
        let lengths = length_spectrum_with(m.metric.base(), length + 4.0 * width, &SpectrumOptions::default())?;
        window_clearance(&lengths.distinct_lengths(), length, width)?;
    }
    let spec = acquire(job, &m, &s)?;
    let top = spec.max_eigenvalue().sqrt();
    let step = positive("step", p.step.unwrap_or(0.1))?;
    let band = (p.band_start.unwrap_or(20.0), p.band_end.unwrap_or(top - REACH / width));
    let resolved = merge(
        s.resolved(),
        json!({ "length": length, "width": width, "band_start": band.0, "band_end": band.1, "step": step }),
    );
    let r = resolvent_probe(&spec, &ResolventOptions { length, width, band, step })?;
    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    out.csv(
        "probe.csv",
        &["lambda", "re", "im", "abs"],
        r.lambdas.iter().zip(&r.values).map(|(l, v)| vec![num(*l), num(v.re), num(v.im), num(v.norm())]),
    )?;
    out.csv("shells.csv", &["lambda", "max_abs"], r.shells.iter().map(|(l, v)| vec![num(*l), num(*v)]))?;
    out.summary(&json!({
        "command": "probe",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "exponent": r.exponent,
        "half_width": r.half_width,
        "shells": r.shells.len(),
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure: None })
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Rigid => "rigid".into(),
        Verdict::Broken(stage) => format!("broken at {}", stage.as_str()),
    }
}

fn rigidity(job: &Job) -> Result<Outcome, JobError> {
    let p: RigidityParams = job.params()?;
    let m = load_metric(job)?;
    let class = match p.class.as_deref() {
        None => (1, 1),
        Some(&[a, b]) => (a, b),
        Some(other) => return Err(JobError::validation(format!("class needs two integers, got {other:?}"))),
    };
    let mut opts = RigidityOptions::default();
    opts.base_points = p.base_points.unwrap_or(opts.base_points);
    opts.h = positive("h", p.h.unwrap_or(opts.h))?;
    let resolved = json!({ "class": [class.0, class.1], "base_points": opts.base_points, "h": opts.h });
    let r = rigidity_test(m.metric.base(), m.metric.perturbation(), class, &opts)?;
    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    out.csv(
        "rigidity.csv",
        &["x1", "x2", "length_drift", "energy_drift", "second_order", "c", "residual", "e1"],
        r.points.iter().map(|b| {
            vec![
                num(b.x[0]),
                num(b.x[1]),
                num(b.length_drift),
                opt(b.energy_drift),
                opt(b.second_order),
                num(b.c),
                num(b.residual),
                num(b.e1),
            ]
        }),
    )?;
    out.summary(&json!({
        "command": "rigidity",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "verdict": verdict_name(r.verdict),
        "length": r.length,
        "e": r.torus.e,
        "length_drift": r.length_drift,
        "max_length_drift": r.max_length_drift,
        "energy_drift": r.energy_drift,
        "second_order": r.second_order,
        "c": r.c,
        "residual": r.residual,
        "e1": r.e1,
        "c_l2": r.c_l2,
        "u_rms": r.u_rms,
        "degenerate": r.degenerate,
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure: None })
}

type EntryKey = ((i64, i64), &'static str, Option<u32>);

fn sorted_entries(s: &LengthSpectrum<f64>) -> Vec<(EntryKey, f64)> {
    let mut v: Vec<(EntryKey, f64)> =
        s.entries.iter().map(|e| ((e.class, e.kind.as_str(), e.n_osc), e.length)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

/// Largest entrywise length difference from the first spectrum, or `None`
/// when the entries do not pair up.
pub fn entrywise_deviation(spectra: &[LengthSpectrum<f64>]) -> Option<f64> {
    let base = sorted_entries(&spectra[0]);
    let mut worst: f64 = 0.0;
    for s in &spectra[1..] {
        let other = sorted_entries(s);
        if other.len() != base.len() {
            return None;
        }
        for (a, b) in base.iter().zip(&other) {
            if a.0 != b.0 {
                return None;
            }
            worst = worst.max((a.1 - b.1).abs());
        }
    }
    Some(worst)
}

/// Largest relative eigenvalue difference between two spectra, its index,
/// and the perturbation bound `Λ·(δ_a + δ_b)/ρ_min` at that index coming
/// from truncated density coefficients.
pub fn eigenvalue_deviation(a: &LaplaceSpectrum, b: &LaplaceSpectrum) -> (f64, usize, f64) {
    let mut worst = (0.0, 0, 0.0);
    for (i, (x, y)) in a.eigenvalues.iter().zip(&b.eigenvalues).enumerate() {
        let d = (x - y).abs() / x.abs().max(1.0);
        if d > worst.0 {
            let rho_min = a.density_bounds.0.min(b.density_bounds.0);
            worst = (d, i, (a.truncation + b.truncation) / rho_min);
        }
    }
    worst
}

fn rivers(job: &Job) -> Result<Outcome, JobError> {
    let p: RiversParams = job.params()?;
    let m = load_metric(job)?;
    let g = &m.metric;
    if !(g.is_liouville() && g.base().f1().is_constant() && g.base().f1().mean() == 0.0) {
        return Err(JobError::validation("two-rivers takes the river profile from f2; f1 and U must be absent"));
    }
    let profile = g.base().f2();
    let offsets = p.offsets.unwrap_or_else(|| vec![0.35, 0.5, 0.65]);
    if offsets.len() < 2 {
        return Err(JobError::validation("two-rivers needs at least two offsets"));
    }
    let cutoff = positive("max_length", p.max_length.unwrap_or(5.0))?;
    let scan = p.scan_points.unwrap_or(OscillatoryOptions::default().grid_points);
    let s = SpectrumSettings {
        source: Source::Computed,
        count: p.count.unwrap_or(200),
        opts: LaplaceOptions {
            grid: p.grid.unwrap_or(320),
            residual_tolerance: p.residual_tolerance.unwrap_or(1e-8),
            bump_tolerance: p.bump_tolerance.unwrap_or(1e-4),
        },
    };
    let resolved = merge(s.resolved(), json!({ "offsets": offsets, "max_length": cutoff, "scan_points": scan }));
    let metrics: Vec<LiouvilleMetric<f64>> =
        offsets.iter().map(|&c| two_rivers(profile, c)).collect::<Result<_, _>>()?;
    let scan_opts = scan_options(scan)?;
    let spectra: Vec<LengthSpectrum<f64>> =
        metrics.iter().map(|mm| length_spectrum_with(mm, cutoff, &scan_opts)).collect::<Result<_, _>>()?;
    let length_dev = entrywise_deviation(&spectra);

    let mut out =
        OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, Some(&m.fingerprint), &resolved))?;
    let mut header: Vec<String> = vec!["m".into(), "n".into(), "kind".into(), "n_osc".into()];
    header.extend(offsets.iter().map(|c| format!("length_c{c}")));
    let keyed: Vec<Vec<(EntryKey, f64)>> = spectra.iter().map(sorted_entries).collect();
    if length_dev.is_some() {
        let rows = (0..keyed[0].len()).map(|i| {
            let (k, _) = keyed[0][i];
            let mut r = vec![
                k.0 .0.to_string(),
                k.0 .1.to_string(),
                k.1.to_string(),
                k.2.map(|n| n.to_string()).unwrap_or_default(),
            ];
            r.extend(keyed.iter().map(|e| num(e[i].1)));
            r
        });
        out.csv("lengths.csv", &header.iter().map(String::as_str).collect::<Vec<_>>(), rows)?;
    }
    let mut laplace = Value::Null;
    if s.count > 0 {
        let pair: Vec<LaplaceSpectrum> = metrics[..2]
            .iter()
            .map(|mm| {
                let lm = LoadedMetric { metric: mm.clone().into(), fingerprint: mm.fingerprint(), path: String::new() };
                acquire(job, &lm, &s)
            })
            .collect::<Result<_, _>>()?;
        let mut header = vec!["index".to_string()];
        header.extend(offsets[..2].iter().map(|c| format!("Lambda_c{c}")));
        header.push("relative_deviation".into());
        out.csv(
            "eigenvalues.csv",
            &header.iter().map(String::as_str).collect::<Vec<_>>(),
            pair[0]
                .eigenvalues
                .iter()
                .zip(&pair[1].eigenvalues)
                .enumerate()
                .map(|(i, (a, b))| vec![i.to_string(), num(*a), num(*b), num((a - b).abs() / a.abs().max(1.0))]),
        )?;
        let (dev, at, bound) = eigenvalue_deviation(&pair[0], &pair[1]);
        laplace = json!({
            "offsets": [offsets[0], offsets[1]],
            "max_relative_deviation": dev,
            "at_index": at,
            "relative_uncertainty": bound,
            "resolved": dev > bound,
            "truncation": [pair[0].truncation, pair[1].truncation],
        });
    }
    out.summary(&json!({
        "command": "two-rivers",
        "metric": m.path,
        "metric_fingerprint": m.fingerprint,
        "params": resolved,
        "lengths": {
            "entries": spectra[0].entries.len(),
            "paired": length_dev.is_some(),
            "max_deviation": length_dev,
        },
        "laplace": laplace,
    }))?;
    Ok(Outcome { dir: out.path().to_path_buf(), failure: None })
}

fn verify(job: &Job) -> Result<Outcome, JobError> {
    let p: VerifyParams = job.params()?;
    let which = p.suite.unwrap_or(Suite::All);
    let allow = p.allow_known_gaps.unwrap_or(false);
    let resolved = json!({ "suite": which, "allow_known_gaps": allow });
    let mut reports = Vec::new();
    for n in suite::criteria(which) {
        let r = suite::run_criterion(n, which);
        println!("{}", r.line());
        reports.push(r);
    }
    let mut out = OutputDir::create(&job.out, job.command.name(), &job_fingerprint(job, None, &resolved))?;
    let rows = reports.iter().flat_map(|r| {
        r.checks
            .iter()
            .map(move |c| vec![r.number.to_string(), c.id.to_string(), c.status().to_string(), c.detail.clone()])
    });
    out.csv("checks.csv", &["criterion", "check", "status", "detail"], rows)?;
    let failed: Vec<String> = reports.iter().flat_map(|r| r.unexpected_failures()).collect();
    let gaps: Vec<String> = reports.iter().flat_map(|r| r.known_gap_failures()).collect();
    out.summary(&json!({
        "command": "verify",
        "params": resolved,
        "criteria": reports.iter().map(|r| json!({ "number": r.number, "title": r.title, "status": r.status() })).collect::<Vec<_>>(),
        "failed": failed,
        "known_gaps_failed": gaps,
    }))?;
    let failure = if !failed.is_empty() {
        Some(JobError::validation(format!("failed checks: {}", failed.join(", "))))
    } else if !gaps.is_empty() && !allow {
        Some(JobError::validation(format!("known gaps failed: {}", gaps.join(", "))))
    } else {
        None
    };
    Ok(Outcome { dir: out.path().to_path_buf(), failure })
}
