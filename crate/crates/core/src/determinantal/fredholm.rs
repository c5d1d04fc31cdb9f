//! Multi-time generating functions `E[prod_m prod_j (1 + chi_m(X_j(t_m)))]`
//! with `chi_m = exp(f_m) - 1`, as the Fredholm determinant
//! `Det(I + K chi)` on `L^2({t_1, ..., t_M} x [0, 2 pi r))`.
//!
//! The determinant is discretised with the periodic trapezoid rule
//! (Nystrom). Its expansion in principal minors is exactly the finite sum
//! over `N_m`-point integrals with tensor trapezoid quadrature; minors of
//! order above `N` vanish with the rank of `K` at a fixed time.

use rayon::prelude::*;

use super::config::{PointConfiguration, SpaceTimePoint};
use super::martingale::mart_vector;
use crate::error::{invalid, Error, Result};
use crate::heat_kernels::p_wrapped;
use crate::linalg::determinant;
use crate::quadrature::periodic_nodes;
use crate::scalar::Real;

/// Largest particle number and number of times accepted by [`generating_fn`].
pub const MAX_PARTICLES: usize = 3;
pub const MAX_TIMES: usize = 2;

/// Exponents `f_m` at increasing times `t_m`.
pub struct MultiplicativeObservable<'a, T> {
    pub times: Vec<T>,
    pub exponents: Vec<&'a (dyn Fn(T) -> T + Sync)>,
}

/// `Det(I + K chi)` with node doubling from 32 per time slice until successive
/// values agree to `quadrature.rel_tol * max(1, |value|)`.
pub fn generating_fn<T: Real>(xi: &PointConfiguration<T>, obs: &MultiplicativeObservable<'_, T>) -> Result<T> {
    let m = obs.times.len();
    if xi.n() > MAX_PARTICLES || m > MAX_TIMES {
        return Err(Error::ComplexityCap {
            reason: format!("N = {} and M = {m} exceed N <= {MAX_PARTICLES}, M <= {MAX_TIMES}", xi.n()),
        });
    }
    if m == 0 || obs.exponents.len() != m {
        return Err(invalid("times", "need one exponent per time"));
    }
    if obs.times.windows(2).any(|w| !(w[1] > w[0])) || !(obs.times[0] > T::zero()) {
        return Err(invalid("times", "times must be positive and strictly increasing"));
    }
    xi.check_time(obs.times[m - 1])?;
    let mut nodes = 32;
    let mut previous: Option<T> = None;
    loop {
        let value = nystrom_determinant(xi, obs, nodes)?;
        if let Some(prev) = previous {
            let change = (value - prev).abs() / value.abs().max(T::one());
            if change <= xi.quadrature.rel_tol {
                return Ok(value);
            }
            if nodes >= 512 {
                return Err(Error::QuadratureNotConverged { change: change.as_f64() });
            }
        }
        previous = Some(value);
        nodes *= 2;
    }
}

fn nystrom_determinant<T: Real>(
    xi: &PointConfiguration<T>,
    obs: &MultiplicativeObservable<'_, T>,
    nodes: usize,
) -> Result<T> {
    let period = xi.circle().period();
    let xs = periodic_nodes(T::zero(), period, nodes);
    let h = period / T::count(nodes);
    let slots: Vec<(usize, SpaceTimePoint<T>)> = obs
        .times
        .iter()
        .enumerate()
        .flat_map(|(mi, &t)| xs.iter().map(move |&x| (mi, SpaceTimePoint::new(t, x))))
        .collect();
    let size = slots.len();
    let sources = slots
        .iter()
        .map(|(_, p)| {
            xi.points()
                .iter()
                .map(|&u| p_wrapped(xi.parity(), p.t, p.x, u, xi.circle(), &xi.policy))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let martingales = slots
        .par_iter()
        .map(|(_, p)| mart_vector(xi, p.t, p.x))
        .collect::<Result<Vec<_>>>()?;
    let chi: Vec<T> = slots
        .iter()
        .map(|&(mi, p)| (obs.exponents[mi])(p.x).exp_m1())
        .collect();
    let rows = (0..size)
        .into_par_iter()
        .map(|i| {
            let pi = slots[i].1;
            (0..size)
                .map(|j| {
                    let pj = slots[j].1;
                    let mut k: T = sources[i].iter().zip(&martingales[j]).map(|(a, b)| *a * *b).sum();
                    if pi.t > pj.t {
                        k = k - p_wrapped(xi.parity(), pi.t - pj.t, pi.x, pj.x, xi.circle(), &xi.policy)?;
                    }
                    let delta = if i == j { T::one() } else { T::zero() };
                    Ok(delta + k * chi[j] * h)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(determinant(size, rows.into_iter().flatten().collect()))
}
