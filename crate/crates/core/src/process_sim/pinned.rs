//! Single-time expectations of the three-dimensional elliptic Bessel process
//! through the alternating-sign wrapped kernel pinned at `pi r`.

use super::EBesConfig;
use crate::error::{invalid, Error, Result};
use crate::geometry::{CircleGeom, Parity};
use crate::heat_kernels::{p_minus_pinned, p_wrapped};
use crate::quadrature::periodic_trapezoid;
use crate::scalar::Real;
use crate::special_functions::SeriesPolicy;

const SAMPLES: usize = 64;

/// Checks by sampling that `g` is `2 pi r`-periodic and symmetric under the
/// reflections at `0` and `2 pi r`.
pub fn check_reflection_observable<T: Real>(circle: &CircleGeom<T>, g: &dyn Fn(T) -> T) -> Result<()> {
    let p = circle.period();
    // Irrational offset keeps the samples off any special points.
    let offset = T::lit(0.5 * (5f64.sqrt() - 1.0));
    for k in 0..SAMPLES {
        let x = p * (T::count(k) + offset) / T::count(SAMPLES);
        let v = g(x);
        let tol = T::lit(1e-10) * (T::one() + v.abs());
        let checks = [
            ("periodicity", g(x + p)),
            ("reflection at 0", g(-x)),
            ("reflection at 2 pi r", g(p + x) - g(p - x) + v),
        ];
        for (name, other) in checks {
            if !((other - v).abs() <= tol) {
                return Err(Error::ObservableViolation {
                    reason: format!("{name} fails at x = {x}"),
                });
            }
        }
    }
    Ok(())
}

/// `E[g(X(t))]` for the three-dimensional elliptic Bessel process, as
/// `int_0^{2 pi r} g(y) p_{-1}(t, y | u) p_{-1}(t_star - t, pi r | y) dy / p_{-1}(t_star, pi r | u)`.
///
/// The trapezoid rule is doubled from 64 nodes until successive values agree
/// to `1e-12` relative to the integral of `|integrand|`.
pub fn pinned_expectation_ebes3<T: Real>(
    cfg: &EBesConfig<T>,
    t: T,
    g: &dyn Fn(T) -> T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    if cfg.d() != T::lit(3.0) {
        return Err(invalid("d", "the pinned representation holds for D = 3"));
    }
    let geom = cfg.geometry();
    let circle = geom.circle();
    check_reflection_observable(circle, g)?;
    let clock = geom.clock(t)?;
    let u = cfg.u();
    if t == T::zero() {
        return Ok(g(u));
    }
    let norm = p_minus_pinned(geom.t_star(), u, circle, policy)?;
    let mut failure = None;
    let mut integrate = |nodes: usize| -> (T, T) {
        let mut abs_total = T::zero();
        let value = periodic_trapezoid(T::zero(), circle.period(), nodes, |y| {
            let f = p_wrapped(Parity::Minus, t, y, u, circle, policy)
                .and_then(|a| Ok(a * p_minus_pinned(clock.remaining(), y, circle, policy)?));
            match f {
                Ok(v) => {
                    let w = v * g(y);
                    abs_total = abs_total + w.abs();
                    w
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        });
        (value, abs_total * circle.period() / T::count(nodes))
    };
    let mut nodes = 64;
    let (mut previous, _) = integrate(nodes);
    let mut change = T::infinity();
    while nodes < 1 << 20 {
        nodes *= 2;
        let (value, scale) = integrate(nodes);
        change = (value - previous).abs() / scale.max(T::min_positive_value());
        previous = value;
        if change <= T::lit(1e-12) {
            break;
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if change > T::lit(1e-12) {
        return Err(Error::QuadratureNotConverged { change: change.as_f64() });
    }
    Ok(previous / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_observable_gives_one() {
        let p = SeriesPolicy::default();
        for (u, t) in [(1.0f64, 0.3f64), (0.2, 0.05), (5.5, 0.9)] {
            let cfg = EBesConfig::new(3.0, 1.0, 1.0, u).unwrap();
            let v = pinned_expectation_ebes3(&cfg, t, &|_| 1.0, &p).unwrap();
            assert!((v - 1.0).abs() < 1e-11, "u={u} t={t}: {v}");
        }
    }

    #[test]
    fn short_times_return_the_start_value() {
        let p = SeriesPolicy::default();
        let cfg = EBesConfig::new(3.0, 1.0, 1.0, 2.0).unwrap();
        let g = |x: f64| x.cos();
        assert_eq!(pinned_expectation_ebes3(&cfg, 0.0, &g, &p).unwrap(), 2f64.cos());
        let v = pinned_expectation_ebes3(&cfg, 1e-6, &g, &p).unwrap();
        assert!((v - 2f64.cos()).abs() < 1e-5, "{v}");
    }

    #[test]
    fn rejects_non_observables() {
        let p = SeriesPolicy::default();
        let cfg = EBesConfig::new(3.0, 1.0, 1.0, 2.0).unwrap();
        let odd = |x: f64| x.sin();
        assert!(matches!(
            pinned_expectation_ebes3(&cfg, 0.3, &odd, &p),
            Err(Error::ObservableViolation { .. })
        ));
        let aperiodic = |x: f64| x * x;
        assert!(pinned_expectation_ebes3(&cfg, 0.3, &aperiodic, &p).is_err());
        let d2 = EBesConfig::new(2.5, 1.0, 1.0, 2.0).unwrap();
        assert!(pinned_expectation_ebes3(&d2, 0.3, &|_| 1.0, &p).is_err());
        check_reflection_observable(cfg.geometry().circle(), &|x: f64| (x / 2.0).sin().powi(2) + (2.0 * x).cos())
            .unwrap();
    }
}
