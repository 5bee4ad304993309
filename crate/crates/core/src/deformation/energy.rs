//! The energy `E(γ) = ∫_0^1 ρ(γ)|γ̇|² dt` and its first and second variations.

use crate::deformation::path::{integrate, same_size, ParamPath, VariationField};
use crate::deformation::DeformationError;
use crate::metric::{BivariateFunction, Density};
use crate::scalar::Real;

#[inline]
fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

pub fn energy<T: Real, D: Density<T>>(metric: &D, path: &ParamPath<T>) -> T {
    let v = path.velocities();
    let f: Vec<T> = path.points().iter().zip(&v).map(|(p, v)| metric.rho(*p) * dot(*v, *v)).collect();
    integrate(&f)
}

/// `E¹(γ) = ∫ U(γ)|γ̇|² dt`, the derivative of the energy in `ε` for the
/// density `ρ + εU` at a fixed curve.
pub fn perturbation_energy<T: Real>(u: &BivariateFunction<T>, path: &ParamPath<T>) -> T {
    let v = path.velocities();
    let f: Vec<T> = path.points().iter().zip(&v).map(|(p, v)| u.eval(*p) * dot(*v, *v)).collect();
    integrate(&f)
}

/// `dE(δ) = ∫ (∇ρ·δ)|γ̇|² + 2ρ γ̇·δ̇ dt`.
pub fn first_variation_energy<T: Real, D: Density<T>>(
    metric: &D,
    path: &ParamPath<T>,
    delta: &VariationField<T>,
) -> Result<T, DeformationError> {
    same_size(path.points().len(), delta.values().len())?;
    let v = path.velocities();
    let dd = delta.derivatives();
    let two = T::lit(2.0);
    let f: Vec<T> = path
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (r, g) = metric.rho_grad(*p);
            dot(g, delta.values()[i]) * dot(v[i], v[i]) + two * r * dot(v[i], dd[i])
        })
        .collect();
    Ok(integrate(&f))
}

/// `d²E(δ1, δ2) = ∫ δ1ᵀ∇²ρ δ2 |γ̇|² + 2(∇ρ·δ1)(γ̇·δ̇2) + 2(∇ρ·δ2)(γ̇·δ̇1) + 2ρ δ̇1·δ̇2 dt`,
/// evaluated so that swapping the arguments gives the same bits.
pub fn second_variation_energy<T: Real, D: Density<T>>(
    metric: &D,
    path: &ParamPath<T>,
    d1: &VariationField<T>,
    d2: &VariationField<T>,
) -> Result<T, DeformationError> {
    same_size(path.points().len(), d1.values().len())?;
    same_size(path.points().len(), d2.values().len())?;
    let v = path.velocities();
    let (dd1, dd2) = (d1.derivatives(), d2.derivatives());
    let two = T::lit(2.0);
    let f: Vec<T> = path
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let j = metric.rho_jet(*p);
            let (a, b) = (d1.values()[i], d2.values()[i]);
            let h = j.hess;
            let hess = h[0][0] * a[0] * b[0] + h[0][1] * (a[0] * b[1] + a[1] * b[0]) + h[1][1] * a[1] * b[1];
            let mixed = dot(j.grad, a) * dot(v[i], dd2[i]) + dot(j.grad, b) * dot(v[i], dd1[i]);
            hess * dot(v[i], v[i]) + two * mixed + two * j.value * dot(dd1[i], dd2[i])
        })
        .collect();
    Ok(integrate(&f))
}
