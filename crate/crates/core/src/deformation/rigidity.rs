//! Numerical second-variation rigidity test for a linear conformal
//! deformation `ρ_ε = V + εU`, `V = 1 + f1 + f2`, at one rational torus.
//!
//! Stages, per base point `x` of the torus:
//! 1. length drift `dℓ/dε`, the X-ray integral of `U` along `γ⁰`;
//! 2. energy drift of `E_ε(γ_ε)`, Richardson-extrapolated to `ε = 0`;
//! 3. the second-order term `d²E⁰(γ¹, γ¹)`;
//! 4. the least-squares fit `U ≈ cV` along `γ⁰` with weight `|γ̇|²/ρ`, and
//!    `E¹(γ⁰)` compared with `c·L²`.
//!
//! Stages 2 and 3 only run when stage 1 finds no drift.

use rayon::prelude::*;

use crate::deformation::energy::{energy, perturbation_energy, second_variation_energy};
use crate::deformation::geodesics::{first_order, torus_geodesic, PathOptions};
use crate::deformation::path::{integrate, ParamPath};
use crate::deformation::xray::{torus_base_points, xray_on_path};
use crate::deformation::DeformationError;
use crate::dynamics::{find_rational_torus, RationalTorus};
use crate::metric::{BivariateFunction, ConformalMetric, Density, LiouvilleMetric};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct RigidityOptions<T> {
    pub base_points: usize,
    pub path: PathOptions<T>,
    /// Continuation step `h` of the Richardson pair `{h, h/2}`.
    pub h: T,
    /// Length drift counted as zero below this times `L`.
    pub drift_tolerance: T,
    /// Energy drift counted as zero below this times `L²`; the Richardson
    /// estimate carries an `O(h²)` error.
    pub energy_tolerance: T,
    /// `d²E⁰(γ¹, γ¹)` counted as zero below this times `L²`.
    pub second_order_tolerance: T,
    /// Bound on `|c|` and on the fit residual for a rigid verdict.
    pub fit_tolerance: T,
}

impl<T: Real> Default for RigidityOptions<T> {
    fn default() -> Self {
        Self {
            base_points: 8,
            path: PathOptions::default(),
            h: T::lit(1e-3),
            drift_tolerance: T::lit(1e-8),
            energy_tolerance: T::lit(1e-5),
            second_order_tolerance: T::lit(1e-6),
            fit_tolerance: T::lit(1e-6),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RigidityStage {
    LengthDrift,
    EnergyDrift,
    SecondOrder,
    Proportionality,
    Scale,
}

impl RigidityStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            RigidityStage::LengthDrift => "length-drift",
            RigidityStage::EnergyDrift => "energy-drift",
            RigidityStage::SecondOrder => "second-order",
            RigidityStage::Proportionality => "proportionality",
            RigidityStage::Scale => "scale",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Rigid,
    /// First stage whose quantity is not zero within tolerance.
    Broken(RigidityStage),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasePointReport<T> {
    pub x: [T; 2],
    pub length_drift: T,
    pub energy_drift: Option<T>,
    pub second_order: Option<T>,
    /// Fit of `U ≈ cV` along this geodesic alone.
    pub c: T,
    pub residual: T,
    /// `E¹(γ⁰) = ∫ U|γ̇|²`.
    pub e1: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidityReport<T> {
    pub class: (i64, i64),
    pub torus: RationalTorus<T>,
    pub length: T,
    /// Mean of `dℓ/dε` over the base points.
    pub length_drift: T,
    pub max_length_drift: T,
    /// Largest `|dE/dε|` over the base points, when stage 2 ran.
    pub energy_drift: Option<T>,
    /// Largest `|d²E⁰(γ¹, γ¹)|`, when stage 3 ran.
    pub second_order: Option<T>,
    /// Joint fit of `U ≈ cV` over all base-point geodesics.
    pub c: T,
    /// Weighted RMS of `U − cV` along the geodesics.
    pub residual: T,
    /// Mean of `E¹(γ⁰)`; equals `c·L²` when `U = cV` along `γ⁰`.
    pub e1: T,
    pub c_l2: T,
    /// Weighted RMS of `U` along the geodesics.
    pub u_rms: T,
    /// `U` is below the fit tolerance along every geodesic, so the
    /// proportionality fit carries no information.
    pub degenerate: bool,
    pub points: Vec<BasePointReport<T>>,
    pub verdict: Verdict,
}

/// Samples of the weight `w = |γ̇|²/V`, of `U` and of `V` along one path.
struct FitSamples<T> {
    w: Vec<T>,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> FitSamples<T> {
    fn new(base: &LiouvilleMetric<T>, u: &BivariateFunction<T>, path: &ParamPath<T>) -> Self {
        let vel = path.velocities();
        let mut s = FitSamples { w: Vec::new(), u: Vec::new(), v: Vec::new() };
        for (p, d) in path.points().iter().zip(&vel) {
            let vv = base.rho(*p);
            s.w.push((d[0] * d[0] + d[1] * d[1]) / vv);
            s.u.push(u.eval(*p));
            s.v.push(vv);
        }
        s
    }

    /// `[∫wUV, ∫wV², ∫w]`.
    fn sums(&self) -> [T; 3] {
        let col = |f: &dyn Fn(usize) -> T| integrate(&(0..self.w.len()).map(f).collect::<Vec<_>>());
        [col(&|i| self.w[i] * self.u[i] * self.v[i]), col(&|i| self.w[i] * self.v[i] * self.v[i]), col(&|i| self.w[i])]
    }

    /// `∫w(U − cV)²`.
    fn misfit(&self, c: T) -> T {
        let f: Vec<T> = (0..self.w.len())
            .map(|i| {
                let r = self.u[i] - c * self.v[i];
                self.w[i] * r * r
            })
            .collect();
        integrate(&f)
    }
}

fn rms_u<T: Real>(samples: &[&FitSamples<T>]) -> T {
    let sq: T = samples.iter().map(|f| f.misfit(T::zero())).sum();
    let w: T = samples.iter().map(|f| f.sums()[2]).sum();
    (sq / w).sqrt()
}

fn fit<T: Real>(samples: &[&FitSamples<T>]) -> (T, T) {
    let mut s = [T::zero(); 3];
    for f in samples {
        for (t, x) in s.iter_mut().zip(f.sums()) {
            *t += x;
        }
    }
    let c = s[0] / s[1];
    let sq: T = samples.iter().map(|f| f.misfit(c)).sum();
    (c, (sq.max(T::zero()) / s[2]).sqrt())
}

pub fn rigidity_test<T: Real>(
    base: &LiouvilleMetric<T>,
    u: &BivariateFunction<T>,
    class: (i64, i64),
    opts: &RigidityOptions<T>,
) -> Result<RigidityReport<T>, DeformationError> {
    let torus = find_rational_torus(base, class)?;
    let length = torus.length;
    let points = torus_base_points(base, &torus, opts.base_points.max(1))?;

    // Stage 1 and the fit along γ⁰.
    let stage1: Result<Vec<_>, DeformationError> = points
        .par_iter()
        .map(|&x| {
            let path = torus_geodesic(base, &torus, x, &opts.path)?;
            let drift = xray_on_path(base, u, &path, length);
            let sums = FitSamples::new(base, u, &path);
            let e1 = perturbation_energy(u, &path);
            Ok((x, path, drift, sums, e1))
        })
        .collect();
    let stage1 = stage1?;
    let max_drift = stage1.iter().map(|s| s.2.abs()).fold(T::zero(), T::max);
    let mean = |v: &mut dyn Iterator<Item = T>| {
        let (s, n) = v.fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
        s / T::from_count(n.max(1))
    };
    let drift_free = max_drift <= opts.drift_tolerance * length;

    let family = ConformalMetric::new(base.clone(), u.clone(), T::zero())?;
    let later: Vec<(Option<T>, Option<T>)> = if drift_free {
        let r: Result<Vec<_>, DeformationError> = stage1
            .par_iter()
            .map(|(x, _, _, _, _)| {
                let fo = first_order(&family, class, *x, opts.h, &opts.path)?;
                let e0 = energy(base, &fo.base);
                let e_half = energy(&family.with_epsilon(opts.h * T::lit(0.5))?, &fo.half);
                let e_full = energy(&family.with_epsilon(opts.h)?, &fo.full);
                let d_half = (e_half - e0) / (opts.h * T::lit(0.5));
                let d_full = (e_full - e0) / opts.h;
                let de = d_half + d_half - d_full;
                let q = second_variation_energy(base, &fo.base, &fo.gamma1, &fo.gamma1)?;
                Ok((Some(de), Some(q)))
            })
            .collect();
        r?
    } else {
        vec![(None, None); stage1.len()]
    };

    let mut reports = Vec::with_capacity(stage1.len());
    for ((x, _, drift, samples, e1), (de, q)) in stage1.iter().zip(&later) {
        let (c, residual) = fit(&[samples]);
        reports.push(BasePointReport {
            x: *x,
            length_drift: *drift,
            energy_drift: *de,
            second_order: *q,
            c,
            residual,
            e1: *e1,
        });
    }
    let all: Vec<&FitSamples<T>> = stage1.iter().map(|s| &s.3).collect();
    let (c, residual) = fit(&all);
    let u_rms = rms_u(&all);
    let energy_drift = drift_free.then(|| later.iter().filter_map(|l| l.0).map(|v| v.abs()).fold(T::zero(), T::max));
    let second_order = drift_free.then(|| later.iter().filter_map(|l| l.1).map(|v| v.abs()).fold(T::zero(), T::max));
    let l2 = length * length;
    let verdict = if !drift_free {
        Verdict::Broken(RigidityStage::LengthDrift)
    } else if energy_drift.unwrap() > opts.energy_tolerance * l2 {
        Verdict::Broken(RigidityStage::EnergyDrift)
    } else if second_order.unwrap() > opts.second_order_tolerance * l2 {
        Verdict::Broken(RigidityStage::SecondOrder)
    } else if !(residual <= opts.fit_tolerance) {
        Verdict::Broken(RigidityStage::Proportionality)
    } else if !(c.abs() <= opts.fit_tolerance) {
        Verdict::Broken(RigidityStage::Scale)
    } else {
        Verdict::Rigid
    };
    Ok(RigidityReport {
        class,
        torus,
        length,
        length_drift: mean(&mut stage1.iter().map(|s| s.2)),
        max_length_drift: max_drift,
        energy_drift,
        second_order,
        c,
        residual,
        e1: mean(&mut stage1.iter().map(|s| s.4)),
        c_l2: c * l2,
        u_rms,
        degenerate: u_rms <= opts.fit_tolerance,
        points: reports,
        verdict,
    })
}
