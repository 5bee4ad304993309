//! Eigenvalues of `−Δ_g = −ρ^{-1}Δ` for conformal densities on the unit
//! torus: the pencil `−Δu = Λρu` by Rayleigh–Ritz on real Fourier modes.
//!
//! The basis is `1, √2 cos 2πk·x, √2 sin 2πk·x` for `k` in the half disk
//! `|k| ≤ N/2`, orthonormal in `L²`. Stiffness is diagonal, `4π²|k|²`; the
//! Gram matrix of `ρ` is exact from its Fourier coefficients. Basis functions
//! split into blocks with no Gram coupling, and each block is solved densely in the
//! inverse form `D^{-1/2} M D^{-1/2} w = Λ^{-1} w`, after eliminating the
//! constant mode (an exact `Λ = 0`) by a Schur complement.

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::{Mat, Side};
use liouville_core::metric::ConformalMetric;
use num_complex::Complex64;

use crate::density::DensityCoefficients;
use crate::spectrum::LaplaceSpectrum;
use crate::SpectralError;

const FOUR_PI2: f64 = 4.0 * PI * PI;

#[derive(Clone, Copy, Debug)]
pub struct LaplaceOptions {
    /// Resolution `N`: modes with `|k| ≤ N/2`.
    pub grid: usize,
    /// Relative residual `‖Δu + Λρu‖/‖ρu‖` each returned pair must meet.
    pub residual_tolerance: f64,
    /// Allowed `ℓ¹` tail of discarded bump coefficients.
    pub bump_tolerance: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self { grid: 64, residual_tolerance: 1e-8, bump_tolerance: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Const,
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug)]
struct BasisFn {
    k: (i64, i64),
    kind: Kind,
}

/// Assembled generalized eigenproblem.
#[derive(Clone, Debug)]
pub struct LaplaceProblem {
    grid: usize,
    radius: i64,
    density: DensityCoefficients,
    area: f64,
    /// Basis functions of each block.
    blocks: Vec<Vec<BasisFn>>,
}

fn in_half(k: (i64, i64)) -> bool {
    k.0 > 0 || (k.0 == 0 && k.1 > 0)
}

fn canonical(k: (i64, i64)) -> (i64, i64) {
    if k == (0, 0) || in_half(k) {
        k
    } else {
        (-k.0, -k.1)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub fn assemble(metric: &ConformalMetric<f64>, opts: &LaplaceOptions) -> Result<LaplaceProblem, SpectralError> {
    let n = opts.grid;
    if n < 32 || !n.is_multiple_of(2) {
        return Err(SpectralError::InvalidGrid(n));
    }
    let density = DensityCoefficients::new(metric, n / 4, opts.bump_tolerance)?;
    if density.lower_bound <= 0.0 {
        return Err(SpectralError::InvalidInput("density is not bounded away from zero".into()));
    }
    let r = (n / 2) as i64;
    let mut modes = vec![(0i64, 0i64)];
    for k1 in 0..=r {
        for k2 in -r..=r {
            if k1 * k1 + k2 * k2 <= r * r && in_half((k1, k2)) {
                modes.push((k1, k2));
            }
        }
    }
    let mut basis = vec![BasisFn { k: (0, 0), kind: Kind::Const }];
    for &k in &modes[1..] {
        basis.push(BasisFn { k, kind: Kind::Cos });
        basis.push(BasisFn { k, kind: Kind::Sin });
    }
    // Mode k sits at 0 (constant) or 2i-1, 2i.
    let index: HashMap<(i64, i64), usize> = modes.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let slots = |i: usize| if i == 0 { 0..1 } else { 2 * i - 1..2 * i + 1 };
    let mut parent: Vec<usize> = (0..basis.len()).collect();
    for (i, k) in modes.iter().enumerate() {
        for q in density.support() {
            let Some(&j) = index.get(&canonical((k.0 + q.0, k.1 + q.1))) else { continue };
            // Union only pairs with a nonzero Gram entry, so that even
            // densities split cosines from sines.
            for a in slots(i) {
                for b in slots(j) {
                    if gram(&density, basis[a], basis[b]) != 0.0 {
                        let (x, y) = (find(&mut parent, a), find(&mut parent, b));
                        if x != y {
                            parent[x.max(y)] = x.min(y);
                        }
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<BasisFn>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, &f) in basis.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(f);
    }
    Ok(LaplaceProblem { grid: n, radius: r, area: density.mean, density, blocks: groups })
}

/// `⟨ρ φ_a, φ_b⟩` for the normalized real basis.
fn gram(d: &DensityCoefficients, a: BasisFn, b: BasisFn) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let (k, l) = (a.k, b.k);
    let plus = |x: (i64, i64), y: (i64, i64)| d.get((x.0 + y.0, x.1 + y.1));
    let minus = |x: (i64, i64), y: (i64, i64)| d.get((x.0 - y.0, x.1 - y.1));
    match (a.kind, b.kind) {
        (Kind::Const, Kind::Const) => d.get((0, 0)).re,
        (Kind::Const, Kind::Cos) => s2 * d.get(l).re,
        (Kind::Const, Kind::Sin) => -s2 * d.get(l).im,
        (Kind::Cos, Kind::Const) => s2 * d.get(k).re,
        (Kind::Sin, Kind::Const) => -s2 * d.get(k).im,
        (Kind::Cos, Kind::Cos) => plus(k, l).re + minus(k, l).re,
        (Kind::Sin, Kind::Sin) => minus(k, l).re - plus(k, l).re,
        (Kind::Cos, Kind::Sin) => minus(k, l).im - plus(k, l).im,
        (Kind::Sin, Kind::Cos) => minus(l, k).im - plus(l, k).im,
    }
}

fn stiffness(f: BasisFn) -> f64 {
    FOUR_PI2 * (f.k.0 * f.k.0 + f.k.1 * f.k.1) as f64
}

struct Pair {
    lambda: f64,
    block: usize,
    coeffs: Vec<f64>,
}

impl LaplaceProblem {
    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn basis_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Sizes of the decoupled blocks.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn density(&self) -> &DensityCoefficients {
        &self.density
    }

    fn solve_block(&self, b: usize, keep: usize) -> Result<Vec<Pair>, SpectralError> {
        let basis = &self.blocks[b];
        let n = basis.len();
        let constant = basis.iter().position(|f| f.kind == Kind::Const);
        let mut out = Vec::new();
        if let Some(p) = constant {
            let mut c = vec![0.0; n];
            c[p] = 1.0;
            out.push(Pair { lambda: 0.0, block: b, coeffs: c });
        }
        let rest: Vec<usize> = (0..n).filter(|&i| Some(i) != constant).collect();
        if rest.is_empty() {
            return Ok(out);
        }
        let m = rest.len();
        let inv_sqrt: Vec<f64> = rest.iter().map(|&i| stiffness(basis[i]).sqrt().recip()).collect();
        if let Some(c) = self.density.constant() {
            // Diagonal pencil: Λ = 4π²|k|²/ρ.
            for &i in &rest {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                out.push(Pair { lambda: stiffness(basis[i]) / c, block: b, coeffs: v });
            }
            return Ok(out);
        }
        let m0: Vec<f64> = match constant {
            Some(p) => rest.iter().map(|&i| gram(&self.density, basis[p], basis[i])).collect(),
            None => Vec::new(),
        };
        let m00 = constant.map(|p| gram(&self.density, basis[p], basis[p])).unwrap_or(1.0);
        let mut s = Mat::<f64>::zeros(m, m);
        for j in 0..m {
            for i in j..m {
                let mut v = gram(&self.density, basis[rest[i]], basis[rest[j]]);
                if constant.is_some() {
                    v -= m0[i] * m0[j] / m00;
                }
                v *= inv_sqrt[i] * inv_sqrt[j];
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let evd = s.self_adjoint_eigen(Side::Lower).map_err(|e| SpectralError::Solver(format!("{e:?}")))?;
        let nu = evd.S().column_vector();
        let u = evd.U();
        // Largest ν are the smallest Λ.
        for col in (0..m).rev().take(keep) {
            let v = nu[col];
            if !(v > 0.0) {
                return Err(SpectralError::Solver(format!("non-positive inverse eigenvalue {v:e}")));
            }
            let mut c = vec![0.0; n];
            for (j, &i) in rest.iter().enumerate() {
                c[i] = u[(j, col)] * inv_sqrt[j];
            }
            if let Some(p) = constant {
                c[p] = -m0.iter().zip(&rest).map(|(a, &i)| a * c[i]).sum::<f64>() / m00;
            }
            out.push(Pair { lambda: v.recip(), block: b, coeffs: c });
        }
        Ok(out)
    }

    /// `‖Δu + Λρu‖ / ‖ρu‖` against the continuous operator, including the
    /// part of `ρu` outside the basis.
    fn residual(&self, p: &Pair) -> f64 {
        let basis = &self.blocks[p.block];
        let e = self.radius + self.density.bandwidth() as i64;
        let side = (2 * e + 1) as usize;
        let at = |k: (i64, i64)| (k.0 + e) as usize * side + (k.1 + e) as usize;
        let mut u: Vec<(usize, (i64, i64), Complex64)> = Vec::new();
        let mut uhat = vec![Complex64::new(0.0, 0.0); side * side];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (f, &c) in basis.iter().zip(&p.coeffs) {
            if c == 0.0 {
                continue;
            }
            match f.kind {
                Kind::Const => uhat[at(f.k)] += c,
                Kind::Cos => {
                    uhat[at(f.k)] += c * h;
                    uhat[at((-f.k.0, -f.k.1))] += c * h;
                }
                Kind::Sin => {
                    uhat[at(f.k)] += Complex64::new(0.0, -c * h);
                    uhat[at((-f.k.0, -f.k.1))] += Complex64::new(0.0, c * h);
                }
            }
        }
        for k1 in -self.radius..=self.radius {
            for k2 in -self.radius..=self.radius {
                let v = uhat[at((k1, k2))];
                if v != Complex64::new(0.0, 0.0) {
                    u.push((at((k1, k2)), (k1, k2), v));
                }
            }
        }
        let mut rho_u = vec![Complex64::new(0.0, 0.0); side * side];
        let mut terms: Vec<((i64, i64), Complex64)> = vec![((0, 0), self.density.get((0, 0)))];
        terms.extend(self.density.support().iter().map(|&q| (q, self.density.get(q))));
        for &(_, k, v) in &u {
            for &(q, c) in &terms {
                rho_u[at((k.0 + q.0, k.1 + q.1))] += c * v;
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for k1 in -e..=e {
            for k2 in -e..=e {
                let i = at((k1, k2));
                let lap = uhat[i] * (FOUR_PI2 * (k1 * k1 + k2 * k2) as f64);
                num += (lap - rho_u[i] * p.lambda).norm_sqr();
                den += rho_u[i].norm_sqr();
            }
        }
        (num / den).sqrt()
    }

    /// The `count` smallest eigenvalues, each certified by its residual.
    pub fn solve(&self, count: usize, residual_tolerance: f64) -> Result<LaplaceSpectrum, SpectralError> {
        let limit = self.grid * self.grid / 4;
        if count == 0 || count > limit || count > self.basis_size() {
            return Err(SpectralError::TooManyEigenvalues { count, limit: limit.min(self.basis_size()) });
        }
        // Without the constant mode a block's eigenvalues are at least its
        // smallest symbol over max ρ; blocks above the count-th eigenvalue
        // found so far cannot contribute.
        let bound = |b: usize| -> f64 {
            let fs = &self.blocks[b];
            if fs.iter().any(|f| f.kind == Kind::Const) {
                return 0.0;
            }
            fs.iter().map(|&f| stiffness(f)).fold(f64::INFINITY, f64::min) / self.density.upper_bound
        };
        let mut order: Vec<(f64, usize)> = (0..self.blocks.len()).map(|b| (bound(b), b)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut pairs: Vec<Pair> = Vec::new();
        let mut threshold = f64::INFINITY;
        for (lower, b) in order {
            if lower > threshold {
                break;
            }
            pairs.extend(self.solve_block(b, count)?);
            if pairs.len() >= count {
                pairs.sort_by(|x, y| x.lambda.total_cmp(&y.lambda).then(x.block.cmp(&y.block)));
                pairs.truncate(count);
                threshold = pairs[count - 1].lambda;
            }
        }
        pairs.sort_by(|x, y| x.lambda.total_cmp(&y.lambda).then(x.block.cmp(&y.block)));
        pairs.truncate(count);
        let mut residuals = Vec::with_capacity(count);
        for (i, p) in pairs.iter().enumerate() {
            let r = self.residual(p);
            if !(r < residual_tolerance) {
                return Err(SpectralError::NoConvergence { index: i, residual: r });
            }
            residuals.push(r);
        }
        let values = pairs.iter().map(|p| p.lambda).collect();
        Ok(LaplaceSpectrum::new(
            values,
            residuals,
            Some(self.grid),
            self.area,
            (self.density.lower_bound, self.density.upper_bound),
            self.density.truncation,
        ))
    }
}

/// The `count` smallest eigenvalues of `−Δ_g`.
pub fn eigenvalues(
    metric: &ConformalMetric<f64>,
    count: usize,
    opts: &LaplaceOptions,
) -> Result<LaplaceSpectrum, SpectralError> {
    assemble(metric, opts)?.solve(count, opts.residual_tolerance)
}
