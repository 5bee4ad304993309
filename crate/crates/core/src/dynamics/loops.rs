//! Loop functions: length of the geodesic from `x` to `x + (m, n)` near a
//! rational torus, by Newton shooting on the launch angle and the flow time.

use crate::dynamics::flow::{flow, FlowOptions, GeodesicState};
use crate::dynamics::torus::{find_rational_torus, RationalTorus};
use crate::dynamics::DynamicsError;
use crate::metric::{ConformalMetric, Density};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct LoopOptions<T> {
    pub flow: FlowOptions<T>,
    pub max_newton: usize,
    /// Endpoint residual target, multiplied by `max(1, length)`.
    pub tolerance: T,
    /// Central-difference step in the launch angle.
    pub angle_step: T,
    /// Continuation step in `ε`.
    pub epsilon_step: T,
}

impl<T: Real> Default for LoopOptions<T> {
    fn default() -> Self {
        Self {
            flow: FlowOptions::default(),
            max_newton: 50,
            tolerance: T::lit(1e-11),
            angle_step: T::lit(1e-6),
            epsilon_step: T::lit(1e-2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopSolution<T> {
    /// `ψ_{m,n}(x)`.
    pub length: T,
    pub theta: T,
    /// Unit covector at `x` launching the loop.
    pub covector: [T; 2],
    pub residual: T,
    pub iterations: usize,
}

fn endpoint<T: Real, D: Density<T>>(
    metric: &D,
    x: [T; 2],
    theta: T,
    tau: T,
    opts: &FlowOptions<T>,
) -> Result<GeodesicState<T>, DynamicsError> {
    flow(metric, &GeodesicState::unit(metric, x, theta), tau, opts).map(|o| o.state)
}

/// Newton shooting from a given seed `(theta, tau)`.
pub fn shoot_loop<T: Real, D: Density<T>>(
    metric: &D,
    class: (i64, i64),
    x: [T; 2],
    seed: (T, T),
    opts: &LoopOptions<T>,
) -> Result<LoopSolution<T>, DynamicsError> {
    let target = [x[0] + T::from_int(class.0), x[1] + T::from_int(class.1)];
    let residual_of = |s: &GeodesicState<T>| {
        let p = s.lifted();
        [p[0] - target[0], p[1] - target[1]]
    };
    let norm = |r: [T; 2]| r[0].hypot(r[1]);
    let (mut theta, mut tau) = seed;
    let mut end = endpoint(metric, x, theta, tau, &opts.flow)?;
    let mut r = residual_of(&end);
    let mut res = norm(r);
    for it in 0..=opts.max_newton {
        let tol = opts.tolerance * tau.abs().max(T::one());
        if res <= tol {
            let xi = GeodesicState::unit(metric, x, theta).xi;
            return Ok(LoopSolution { length: tau, theta, covector: xi, residual: res, iterations: it });
        }
        if it == opts.max_newton {
            break;
        }
        let h = opts.angle_step;
        let plus = endpoint(metric, x, theta + h, tau, &opts.flow)?.lifted();
        let minus = endpoint(metric, x, theta - h, tau, &opts.flow)?.lifted();
        let d_theta = [(plus[0] - minus[0]) / (h + h), (plus[1] - minus[1]) / (h + h)];
        let d_tau = end.velocity(metric);
        let det = d_theta[0] * d_tau[1] - d_theta[1] * d_tau[0];
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let step_theta = (r[0] * d_tau[1] - r[1] * d_tau[0]) / det;
        let step_tau = (d_theta[0] * r[1] - d_theta[1] * r[0]) / det;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..12 {
            let (nt, ntau) = (theta - lambda * step_theta, tau - lambda * step_tau);
            if ntau > T::zero() {
                let ne = endpoint(metric, x, nt, ntau, &opts.flow)?;
                let nr = residual_of(&ne);
                let nres = norm(nr);
                if nres < res || nres <= tol {
                    theta = nt;
                    tau = ntau;
                    end = ne;
                    r = nr;
                    res = nres;
                    accepted = true;
                    break;
                }
            }
            lambda *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Err(DynamicsError::NoConvergence { iterations: opts.max_newton, residual: res.as_f64() })
}

fn torus_seed<T: Real>(metric: &ConformalMetric<T>, class: (i64, i64), x: [T; 2]) -> Result<(T, T), DynamicsError> {
    let torus: RationalTorus<T> = find_rational_torus(metric.base(), class)?;
    Ok((torus.angle(metric.base(), x), torus.period))
}

/// `ψ_{m,n}(x)` seeded from the rational torus of the unperturbed metric and
/// continued in `ε` in steps of `opts.epsilon_step`.
pub fn loop_function<T: Real>(
    metric: &ConformalMetric<T>,
    class: (i64, i64),
    x: [T; 2],
    opts: &LoopOptions<T>,
) -> Result<LoopSolution<T>, DynamicsError> {
    let mut seed = torus_seed(metric, class, x)?;
    if metric.is_liouville() {
        return shoot_loop(metric, class, x, seed, opts);
    }
    let eps = metric.epsilon();
    let steps = (eps.abs() / opts.epsilon_step).ceil().to_usize().unwrap_or(1).max(1);
    let mut last = None;
    for k in 1..=steps {
        let ek = eps * T::from_count(k) / T::from_count(steps);
        let mk = metric.with_epsilon(ek)?;
        let sol = shoot_loop(&mk, class, x, seed, opts)?;
        seed = (sol.theta, sol.length);
        last = Some(sol);
    }
    Ok(last.expect("at least one continuation step"))
}

/// Largest `ε ≤ eps_max` (on the grid of continuation steps) up to which the
/// loop at `x` can be continued from the unperturbed torus.
pub fn continuation_radius<T: Real>(
    metric: &ConformalMetric<T>,
    class: (i64, i64),
    x: [T; 2],
    eps_max: T,
    opts: &LoopOptions<T>,
) -> Result<T, DynamicsError> {
    let mut seed = torus_seed(metric, class, x)?;
    let steps = (eps_max.abs() / opts.epsilon_step).ceil().to_usize().unwrap_or(0);
    let mut reached = T::zero();
    for k in 1..=steps {
        let ek = eps_max * T::from_count(k) / T::from_count(steps);
        let Ok(mk) = metric.with_epsilon(ek) else { break };
        match shoot_loop(&mk, class, x, seed, opts) {
            Ok(sol) => {
                seed = (sol.theta, sol.length);
                reached = ek;
            }
            Err(_) => break,
        }
    }
    Ok(reached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::LiouvilleMetric;

    #[test]
    fn flat_loops() {
        let flat: ConformalMetric<f64> = LiouvilleMetric::flat().into();
        let o = LoopOptions::default();
        let a = loop_function(&flat, (1, 1), [0.3, 0.8], &o).unwrap();
        assert!((a.length - 2f64.sqrt()).abs() < 1e-12);
        let b = loop_function(&flat, (2, 1), [0.1, 0.2], &o).unwrap();
        assert!((b.length - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_recovers_from_a_poor_seed() {
        let flat: ConformalMetric<f64> = LiouvilleMetric::flat().into();
        let s = shoot_loop(&flat, (1, 2), [0.0, 0.0], (1.0, 2.0), &LoopOptions::default()).unwrap();
        assert!((s.length - 5f64.sqrt()).abs() < 1e-12);
        assert!((s.theta - 2f64.atan()).abs() < 1e-10);
    }
}
