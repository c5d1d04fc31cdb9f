//! Trigonometric and flat limits of the elliptic drifts.

use crate::error::{invalid, Result};
use crate::geometry::EllipticGeometry;
use crate::potentials::{grad_w_n, u_n_dx_extended};
use crate::scalar::Real;
use crate::special_functions::SeriesPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// `t_star -> infinity` for the Bessel drift: `(D - 1)/(4r) cot(x / 2r)`.
    TrigBessel,
    /// Additionally `r -> infinity`: `(D - 1) / 2x`.
    FlatBessel,
    /// `t_star -> infinity` for the Dyson drift: cotangent pairs and a tangent center term.
    TrigDyson,
    /// Additionally `r -> infinity`: `(beta / 2) sum_k 1 / (x_j - x_k)`.
    FlatDyson,
}

impl LimitKind {
    pub fn is_bessel(self) -> bool {
        matches!(self, LimitKind::TrigBessel | LimitKind::FlatBessel)
    }
}

/// Drift comparison at remaining time `remaining = t_star - t` on a list of states.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDriftCase<T> {
    pub kind: LimitKind,
    pub r: T,
    pub remaining: T,
    /// `D` for the Bessel kinds, `beta` for the Dyson kinds.
    pub strength: T,
    /// One-element states for the Bessel kinds.
    pub states: Vec<Vec<T>>,
}

/// Closed-form limit drift at the state `x`.
pub fn limit_drift<T: Real>(kind: LimitKind, r: T, strength: T, x: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    match kind {
        LimitKind::TrigBessel => vec![(strength - T::one()) / (T::lit(4.0) * r) / (x[0] / (two * r)).tan()],
        LimitKind::FlatBessel => vec![(strength - T::one()) / (two * x[0])],
        LimitKind::TrigDyson => {
            let scale = strength / (T::lit(4.0) * r);
            let total: T = x.iter().copied().sum();
            let center = (total / (two * r)).tan();
            (0..x.len())
                .map(|j| {
                    let pairs: T = (0..x.len())
                        .filter(|&k| k != j)
                        .map(|k| ((x[j] - x[k]) / (two * r)).tan().recip())
                        .sum();
                    scale * (pairs - center)
                })
                .collect()
        }
        LimitKind::FlatDyson => (0..x.len())
            .map(|j| {
                let pairs: T = (0..x.len())
                    .filter(|&k| k != j)
                    .map(|k| (x[j] - x[k]).recip())
                    .sum();
                strength / two * pairs
            })
            .collect(),
    }
}

/// Largest absolute difference between the elliptic drift with `t_star - t =
/// remaining` and its closed-form limit over the states of `case`.
pub fn limit_drift_check<T: Real>(case: &LimitDriftCase<T>, policy: &SeriesPolicy<T>) -> Result<T> {
    let clock = EllipticGeometry::new(case.r, case.remaining)?.clock(T::zero())?;
    let mut worst = T::zero();
    for x in &case.states {
        let elliptic = if case.kind.is_bessel() {
            if x.len() != 1 {
                return Err(invalid("states", "Bessel states have one coordinate"));
            }
            let a = (case.strength - T::one()) / T::lit(2.0);
            vec![-a * u_n_dx_extended(&clock, 1, x[0], policy)?]
        } else {
            if x.len() < 2 {
                return Err(invalid("states", "Dyson states need at least two particles"));
            }
            let scale = -case.strength / T::lit(2.0);
            grad_w_n(&clock, x, policy)?.into_iter().map(|g| scale * g).collect()
        };
        let limit = limit_drift(case.kind, case.r, case.strength, x);
        for (e, l) in elliptic.iter().zip(&limit) {
            worst = worst.max((*e - *l).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|k| vec![lo + (hi - lo) * (k as f64 + 0.5) / n as f64]).collect()
    }

    #[test]
    fn bessel_limits() {
        let p = SeriesPolicy::default();
        let trig = LimitDriftCase {
            kind: LimitKind::TrigBessel,
            r: 1.0,
            remaining: 100.0,
            strength: 3.0,
            states: grid(0.1, 6.1, 40),
        };
        assert!(limit_drift_check(&trig, &p).unwrap() < 1e-6);
        let flat = LimitDriftCase {
            kind: LimitKind::FlatBessel,
            r: 100.0,
            remaining: 1e6,
            strength: 3.0,
            states: vec![vec![1.0]],
        };
        assert!(limit_drift_check(&flat, &p).unwrap() < 1e-3);
        // Far from the limit the check must register a difference.
        let near = LimitDriftCase { remaining: 0.5, ..trig };
        assert!(limit_drift_check(&near, &p).unwrap() > 1e-2);
    }

    #[test]
    fn dyson_limits() {
        let p = SeriesPolicy::default();
        let states = vec![vec![0.5, 2.0], vec![1.0, 4.2], vec![0.3, 1.1]];
        let trig = LimitDriftCase {
            kind: LimitKind::TrigDyson,
            r: 1.0,
            remaining: 100.0,
            strength: 2.0,
            states: states.clone(),
        };
        assert!(limit_drift_check(&trig, &p).unwrap() < 1e-6);
        let three = LimitDriftCase {
            states: vec![vec![0.4, 1.9, 3.3], vec![1.0, 2.0, 5.0]],
            ..trig.clone()
        };
        assert!(limit_drift_check(&three, &p).unwrap() < 1e-6);
        let flat = LimitDriftCase {
            kind: LimitKind::FlatDyson,
            r: 100.0,
            remaining: 1e6,
            strength: 2.0,
            states,
        };
        assert!(limit_drift_check(&flat, &p).unwrap() < 1e-3);
    }
}
