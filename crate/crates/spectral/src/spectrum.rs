//! Computed or enumerated Laplace spectra, the Weyl counting function and
//! the heat trace.

use std::f64::consts::PI;

use crate::SpectralError;

/// Eigenvalues closer than this times `1 + Λ` are one cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-7;

/// Truncation tail allowed in the heat trace, relative to its value.
pub const HEAT_TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceSpectrum {
    /// `Λ_j = λ_j²`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Relative residual of each pair; zero for exact enumerations.
    pub residuals: Vec<f64>,
    /// Cluster id of each eigenvalue.
    pub clusters: Vec<usize>,
    /// Resolution `N` of the solve; `None` for an exact enumeration.
    pub grid: Option<usize>,
    pub area: f64,
    /// Lower and upper bounds on the density.
    pub density_bounds: (f64, f64),
    /// `ℓ¹` size of density coefficients dropped before the solve.
    pub truncation: f64,
}

impl LaplaceSpectrum {
    pub fn new(
        eigenvalues: Vec<f64>,
        residuals: Vec<f64>,
        grid: Option<usize>,
        area: f64,
        density_bounds: (f64, f64),
        truncation: f64,
    ) -> Self {
        let mut clusters = Vec::with_capacity(eigenvalues.len());
        let mut id = 0;
        for (i, v) in eigenvalues.iter().enumerate() {
            if i > 0 && v - eigenvalues[i - 1] > CLUSTER_TOLERANCE * (1.0 + v.abs()) {
                id += 1;
            }
            clusters.push(id);
        }
        Self { eigenvalues, residuals, clusters, grid, area, density_bounds, truncation }
    }

    /// A spectrum given directly by its eigenvalues, e.g. a synthetic one.
    pub fn from_values(mut eigenvalues: Vec<f64>, area: f64, density_bounds: (f64, f64)) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let n = eigenvalues.len();
        Self::new(eigenvalues, vec![0.0; n], None, area, density_bounds, 0.0)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_j = √Λ_j`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    /// Largest eigenvalue held, the top of the certified band.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Size of each cluster, indexed by cluster id.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.clusters.last().map_or(0, |c| c + 1)];
        for &c in &self.clusters {
            out[c] += 1;
        }
        out
    }
}

/// The `count` smallest eigenvalues `4π²|k|²/ρ` of the flat torus with
/// constant density `ρ`, with multiplicity.
pub fn lattice_spectrum(count: usize, density: f64) -> LaplaceSpectrum {
    let mut r = ((count as f64 / PI).sqrt() + 2.0).ceil() as i64;
    loop {
        let mut q: Vec<i64> = Vec::new();
        for j in -r..=r {
            for k in -r..=r {
                if j * j + k * k <= r * r {
                    q.push(j * j + k * k);
                }
            }
        }
        q.sort_unstable();
        if q.len() >= count && q[count - 1] <= r * r {
            let values = q[..count].iter().map(|&n| 4.0 * PI * PI * n as f64 / density).collect();
            return LaplaceSpectrum::new(values, vec![0.0; count], None, density, (density, density), 0.0);
        }
        r += r / 2 + 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylCount {
    /// `N(λ) = #{Λ_j ≤ λ²}`.
    pub count: usize,
    /// Least-squares slope of `N` against `Λ` over the held band.
    pub slope: f64,
    /// `Area/(4π)`.
    pub expected_slope: f64,
    /// Whether `λ²` lies inside the held band.
    pub within_band: bool,
}

pub fn weyl_count(spec: &LaplaceSpectrum, lambda: f64) -> WeylCount {
    let l2 = lambda * lambda;
    let count = spec.eigenvalues.partition_point(|&v| v <= l2);
    // Points (Λ_j, j + 1/2) sit midway up each step of the staircase.
    let n = spec.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (j, v) in spec.eigenvalues.iter().enumerate() {
        sx += v;
        sy += j as f64 + 0.5;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (j, v) in spec.eigenvalues.iter().enumerate() {
        sxy += (v - mx) * (j as f64 + 0.5 - my);
        sxx += (v - mx) * (v - mx);
    }
    WeylCount {
        count,
        slope: sxy / sxx,
        expected_slope: spec.area / (4.0 * PI),
        within_band: l2 <= spec.max_eigenvalue(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatTrace {
    pub t: f64,
    /// `Σ_j e^{-tΛ_j}` over the held eigenvalues.
    pub value: f64,
    /// Bound on the omitted `Σ_{j>M} e^{-tΛ_j}`.
    pub tail_bound: f64,
}

impl HeatTrace {
    /// `t·Tr e^{tΔ}`, which tends to `Area/(4π)` as `t → 0`.
    pub fn scaled(&self) -> f64 {
        self.t * self.value
    }
}

pub fn heat_trace(spec: &LaplaceSpectrum, t: f64) -> Result<HeatTrace, SpectralError> {
    if !(t > 0.0) || spec.is_empty() {
        return Err(SpectralError::InvalidInput(format!("heat trace needs t > 0 and eigenvalues, got t = {t}")));
    }
    let value: f64 = spec.eigenvalues.iter().map(|v| (-t * v).exp()).sum();
    // Σ_{j>M} e^{-tΛ_j} ≤ t∫_{Λ_M}^∞ N(Λ)e^{-tΛ}dΛ. Comparison with the flat
    // torus scaled by ρ_max gives N(Λ) ≤ π(α√Λ + β)², α = √ρ_max/(2π),
    // β = 1/√2, and √Λ ≤ Λ/(2√Λ_M) + √Λ_M/2 makes the bound linear.
    let top = spec.max_eigenvalue().max(f64::MIN_POSITIVE);
    let alpha = spec.density_bounds.1.sqrt() / (2.0 * PI);
    let beta = std::f64::consts::FRAC_1_SQRT_2;
    let s = top.sqrt();
    let p = PI * (alpha * alpha + alpha * beta / s);
    let q = PI * (alpha * beta * s + beta * beta);
    let tail_bound = (-t * top).exp() * (p * top + q + p / t);
    if tail_bound > HEAT_TAIL_TOLERANCE * value {
        return Err(SpectralError::TailTooLarge { t, tail: tail_bound, value });
    }
    Ok(HeatTrace { t, value, tail_bound })
}
