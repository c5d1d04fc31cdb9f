//! Observables of the particle configuration and single-time expectations
//! through the wrapped Karlin-McGregor density.
//!
//! Both routes integrate over the torus `[0, 2 pi r)^N` with the tensor
//! trapezoid rule and divide by `N!`: the integrands are symmetric and
//! periodic, so this equals the integral over the alcove.

use rayon::prelude::*;

use super::config::PointConfiguration;
use super::martingale::mart_vector;
use crate::error::{invalid, Error, Result};
use crate::geometry::CircleGeom;
use crate::heat_kernels::{p_wrapped, q_r_n};
use crate::linalg::determinant;
use crate::quadrature::periodic_nodes;
use crate::scalar::Real;

const SAMPLES: usize = 32;
const MAX_TORUS_POINTS: usize = 1 << 24;

/// Function of the `N` particle positions.
pub type ConfigurationFn<'a, T> = &'a (dyn Fn(&[T]) -> T + Sync);

/// Which observable conditions held on the sampled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservableFlags {
    /// `2 pi r`-periodic in every coordinate.
    pub periodic: bool,
    /// Symmetric under permutations of the coordinates.
    pub symmetric: bool,
    /// Invariant under `xbar -> -xbar` and `xbar -> 4 pi r - xbar`, realised
    /// by translating every coordinate by the same amount.
    pub center_reflection: bool,
}

impl ObservableFlags {
    pub fn all(&self) -> bool {
        self.periodic && self.symmetric && self.center_reflection
    }
}

/// Deterministic sample configuration `k` with `n` coordinates in `[0, 2 pi r)`.
fn sample<T: Real>(circle: &CircleGeom<T>, n: usize, k: usize) -> Vec<T> {
    // Additive recurrence with irrational steps.
    (0..n)
        .map(|j| {
            let step = ((j + 2) as f64).sqrt().fract();
            let v = ((k + 1) as f64 * step + 0.5 * (5f64.sqrt() - 1.0) * j as f64).fract();
            circle.period() * T::lit(v)
        })
        .collect()
}

/// Samples the three observable conditions for `g` on `n` coordinates.
pub fn observable_flags<T: Real>(circle: &CircleGeom<T>, n: usize, g: ConfigurationFn<'_, T>) -> ObservableFlags {
    let p = circle.period();
    let mut flags = ObservableFlags {
        periodic: true,
        symmetric: true,
        center_reflection: true,
    };
    let close = |a: T, b: T| (a - b).abs() <= T::lit(1e-10) * (T::one() + a.abs());
    for k in 0..SAMPLES {
        let x = sample(circle, n, k);
        let v = g(&x);
        for j in 0..n {
            let mut y = x.clone();
            y[j] = y[j] + p;
            flags.periodic &= close(v, g(&y));
        }
        let mut swapped = x.clone();
        swapped.swap(0, n - 1);
        flags.symmetric &= close(v, g(&swapped));
        let mut rotated = x.clone();
        rotated.rotate_left(1);
        flags.symmetric &= close(v, g(&rotated));
        let xbar = circle.center_of_mass(&x);
        let nf = T::count(n);
        for shift in [-T::lit(2.0) * xbar / nf, (T::lit(2.0) * p - T::lit(2.0) * xbar) / nf] {
            let moved: Vec<T> = x.iter().map(|&xj| xj + shift).collect();
            flags.center_reflection &= close(v, g(&moved));
        }
    }
    flags
}

/// Fails with [`Error::ObservableViolation`] unless all three conditions hold.
pub fn check_configuration_observable<T: Real>(
    circle: &CircleGeom<T>,
    n: usize,
    g: ConfigurationFn<'_, T>,
) -> Result<()> {
    let flags = observable_flags(circle, n, g);
    if flags.all() {
        Ok(())
    } else {
        Err(Error::ObservableViolation {
            reason: format!("{flags:?}"),
        })
    }
}

/// Product `prod_m g_m(X(t_m))` of single-time functions at increasing times.
pub struct Observable<'a, T> {
    pub times: Vec<T>,
    pub functions: Vec<ConfigurationFn<'a, T>>,
    pub flags: Vec<ObservableFlags>,
}

impl<'a, T: Real> Observable<'a, T> {
    pub fn new(
        circle: &CircleGeom<T>,
        n: usize,
        times: Vec<T>,
        functions: Vec<ConfigurationFn<'a, T>>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != functions.len() {
            return Err(invalid("times", "need one function per time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times", "times must increase strictly"));
        }
        let flags = functions.iter().map(|g| observable_flags(circle, n, *g)).collect();
        Ok(Self { times, functions, flags })
    }

    pub fn is_observable(&self) -> bool {
        self.flags.iter().all(ObservableFlags::all)
    }
}

/// Which weight multiplies the wrapped Karlin-McGregor density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `det[M_k(t, x_j)]`.
    Determinantal,
    /// `q_N(t_star - t, v | x) / q_N(t_star, v | u)` with the pinning configuration `v`.
    KernelRatio,
}

/// `(1/N!) int g(x) q_N(t, x | u) w(t, x) dx` over the torus without the
/// observable check; the trapezoid rule is doubled from 16 nodes per
/// coordinate until successive values agree to `quadrature.rel_tol`
/// relative to the integral of `|integrand|`.
pub(crate) fn torus_expectation<T: Real>(
    xi: &PointConfiguration<T>,
    t: T,
    g: ConfigurationFn<'_, T>,
    weight: Weight,
) -> Result<T> {
    if !(t > T::zero()) {
        return Err(invalid("t", "expectations need a positive time"));
    }
    xi.check_time(t)?;
    let n = xi.n();
    let circle = xi.circle();
    let period = circle.period();
    let pins = circle.pinning_points(n);
    let normalization = q_r_n(xi.t_star(), &pins, xi.points(), circle, &xi.policy)?;
    let factorial = (1..=n).map(T::count).fold(T::one(), |a, b| a * b);
    let mut nodes = 16usize;
    let mut previous: Option<T> = None;
    loop {
        let total_points = nodes.checked_pow(n as u32).filter(|&m| m <= MAX_TORUS_POINTS);
        let Some(total_points) = total_points else {
            return Err(Error::ComplexityCap {
                reason: format!("{nodes}^{n} torus nodes"),
            });
        };
        let xs = periodic_nodes(T::zero(), period, nodes);
        let sources = xs
            .iter()
            .map(|&x| {
                xi.points()
                    .iter()
                    .map(|&u| p_wrapped(xi.parity(), t, x, u, circle, &xi.policy))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = match weight {
            Weight::Determinantal => xs
                .par_iter()
                .map(|&x| mart_vector(xi, t, x))
                .collect::<Result<Vec<_>>>()?,
            Weight::KernelRatio => xs
                .iter()
                .map(|&x| {
                    pins.iter()
                        .map(|&v| p_wrapped(xi.parity(), xi.t_star() - t, v, x, circle, &xi.policy))
                        .collect::<Result<Vec<T>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let (sum, abs_sum) = (0..total_points)
            .into_par_iter()
            .map(|flat| {
                let mut idx = vec![0usize; n];
                let mut rest = flat;
                for slot in idx.iter_mut() {
                    *slot = rest % nodes;
                    rest /= nodes;
                }
                let a = determinant(n, idx.iter().flat_map(|&i| sources[i].iter().copied()).collect());
                if a == T::zero() {
                    return (T::zero(), T::zero());
                }
                let b = determinant(n, idx.iter().flat_map(|&i| weights[i].iter().copied()).collect());
                let x: Vec<T> = idx.iter().map(|&i| xs[i]).collect();
                let v = g(&x) * a * b;
                (v, v.abs())
            })
            .reduce(|| (T::zero(), T::zero()), |p, q| (p.0 + q.0, p.1 + q.1));
        let cell = (period / T::count(nodes)).powi(n as i32) / factorial;
        let scale = match weight {
            Weight::Determinantal => T::one(),
            Weight::KernelRatio => normalization.recip(),
        };
        let value = sum * cell * scale;
        let magnitude = (abs_sum * cell * scale).abs().max(T::min_positive_value());
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "torus expectation",
            });
        }
        if let Some(prev) = previous {
            let change = (value - prev).abs() / magnitude;
            if change <= xi.quadrature.rel_tol {
                return Ok(value);
            }
            if nodes >= 1024 {
                return Err(Error::QuadratureNotConverged { change: change.as_f64() });
            }
        }
        previous = Some(value);
        nodes *= 2;
    }
}

/// `E[g(X(t))]` for an observable `g`, weighting the wrapped Karlin-McGregor
/// density by the requested expression of the time-dependent factor.
pub fn dmr_expectation<T: Real>(
    xi: &PointConfiguration<T>,
    t: T,
    g: ConfigurationFn<'_, T>,
    weight: Weight,
) -> Result<T> {
    check_configuration_observable(xi.circle(), xi.n(), g)?;
    torus_expectation(xi, t, g, weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> PointConfiguration<f64> {
        PointConfiguration::new(vec![1.0, 3.2], 1.0, 1.0).unwrap()
    }

    #[test]
    fn classifies_observables() {
        let circle = CircleGeom::new(1.0).unwrap();
        let distance = |x: &[f64]| (x[1] - x[0]).cos();
        assert!(observable_flags(&circle, 2, &distance).all());
        let center = |x: &[f64]| ((x[0] + x[1] - std::f64::consts::PI) / 1.0).cos();
        assert!(observable_flags(&circle, 2, &center).all());
        let position = |x: &[f64]| x[0].cos() + x[1].cos();
        let flags = observable_flags(&circle, 2, &position);
        assert!(flags.periodic && flags.symmetric && !flags.center_reflection);
        let ordered = |x: &[f64]| x[0].sin();
        assert!(!observable_flags(&circle, 2, &ordered).symmetric);
        let linear = |x: &[f64]| x[0] + x[1];
        assert!(!observable_flags(&circle, 2, &linear).periodic);
        let three = |x: &[f64]| (x[1] - x[0]).cos() + (x[2] - x[1]).cos() + (x[0] - x[2]).cos();
        assert!(observable_flags(&circle, 3, &three).all());
    }

    #[test]
    fn weights_give_the_same_expectation() {
        let xi = config();
        let g = |x: &[f64]| (x[1] - x[0]).cos() + 0.5 * (x[0] + x[1] - std::f64::consts::PI).cos();
        let one = |_: &[f64]| 1.0;
        for t in [0.2, 0.6] {
            let a = dmr_expectation(&xi, t, &g, Weight::Determinantal).unwrap();
            let b = dmr_expectation(&xi, t, &g, Weight::KernelRatio).unwrap();
            assert!((a - b).abs() < 1e-9, "t={t}: {a} {b}");
            let total = dmr_expectation(&xi, t, &one, Weight::KernelRatio).unwrap();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
        let position = |x: &[f64]| x[0].cos() + x[1].cos();
        assert!(matches!(
            dmr_expectation(&xi, 0.3, &position, Weight::Determinantal),
            Err(Error::ObservableViolation { .. })
        ));
    }

    #[test]
    fn observable_records_flags() {
        let circle = CircleGeom::new(1.0).unwrap();
        let distance = |x: &[f64]| (x[1] - x[0]).cos();
        let position = |x: &[f64]| x[0].cos() + x[1].cos();
        let obs = Observable::new(&circle, 2, vec![0.1, 0.2], vec![&distance, &position]).unwrap();
        assert!(obs.flags[0].all() && !obs.flags[1].all() && !obs.is_observable());
        assert!(Observable::new(&circle, 2, vec![0.2, 0.1], vec![&distance, &position]).is_err());
    }
}
