//! Offset decomposition of the pinned Karlin-McGregor weight. The pinning
//! configuration shifted by `o` slots is `v_o = v + 2 pi r o / N`; the signed
//! measure on offsets is
//! `mu(o) = (-1)^o det[p(t_star, v_{o,j} | u_k)] / sum_o' (-1)^o' det[p(t_star, v_{o',j} | u_k)]`
//! with Brownian kernels on the line.

use super::config::PointConfiguration;
use crate::error::{Error, Result};
use crate::heat_kernels::{km_det, q_r_n};
use crate::scalar::Real;

const MAX_OFFSET: i64 = 100_000;

fn shifted_pins<T: Real>(xi: &PointConfiguration<T>, o: i64) -> Vec<T> {
    let n = xi.n();
    let shift = xi.circle().period() * T::lit(o as f64) / T::count(n);
    xi.circle().pinning_points(n).into_iter().map(|v| v + shift).collect()
}

fn signed_term<T: Real>(xi: &PointConfiguration<T>, t: T, x: &[T], o: i64) -> Result<T> {
    let sign = if o.rem_euclid(2) == 0 { T::one() } else { -T::one() };
    Ok(sign * km_det(t, &shifted_pins(xi, o), x)?)
}

/// `sum_o (-1)^o det[p(t, v_{o,j} | x_k)]`, summed outward from `o = 0` until
/// two consecutive offsets on both sides contribute below `1e-17` of the sum.
fn offset_sum<T: Real>(xi: &PointConfiguration<T>, t: T, x: &[T]) -> Result<T> {
    let mut sum = signed_term(xi, t, x, 0)?;
    let mut quiet = 0;
    for o in 1..=MAX_OFFSET {
        let a = signed_term(xi, t, x, o)?;
        let b = signed_term(xi, t, x, -o)?;
        sum = sum + a + b;
        if a.abs().max(b.abs()) <= T::lit(1e-17) * sum.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: MAX_OFFSET as usize,
    })
}

/// Signed offset measure `mu(o)`.
pub fn offset_measure<T: Real>(xi: &PointConfiguration<T>, o: i64) -> Result<T> {
    let norm = offset_sum(xi, xi.t_star(), xi.points())?;
    Ok(signed_term(xi, xi.t_star(), xi.points(), o)? / norm)
}

/// The pinned weight at `(t, x)` computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetDecomposition<T> {
    /// `sum_o mu(o) det[p(t_star - t, v_o | x)] / det[p(t_star, v_o | u)]`.
    pub offset_sum: T,
    /// `q_N(t_star - t, v | x) / q_N(t_star, v | u)`.
    pub kernel_ratio: T,
}

impl<T: Real> OffsetDecomposition<T> {
    pub fn residual(&self) -> T {
        (self.offset_sum - self.kernel_ratio).abs()
    }
}

/// Compares the offset decomposition with the wrapped-kernel ratio. The
/// two agree up to windings that do not return the pinning configuration to
/// itself, which are negligible when `N t_star / r^2` is small.
pub fn offset_decomposition<T: Real>(xi: &PointConfiguration<T>, t: T, x: &[T]) -> Result<OffsetDecomposition<T>> {
    xi.check_time(t)?;
    let circle = xi.circle();
    circle.check_alcove(x)?;
    let remaining = xi.t_star() - t;
    let pins = circle.pinning_points(xi.n());
    let kernel_ratio = q_r_n(remaining, &pins, x, circle, &xi.policy)?
        / q_r_n(xi.t_star(), &pins, xi.points(), circle, &xi.policy)?;
    let offset_sum = offset_sum(xi, remaining, x)? / offset_sum(xi, xi.t_star(), xi.points())?;
    Ok(OffsetDecomposition {
        offset_sum,
        kernel_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_is_normalized_and_alternates() {
        let xi = PointConfiguration::new(vec![0.5, 2.0, 4.4], 1.0, 1.0).unwrap();
        let total: f64 = (-40..=40).map(|o| offset_measure(&xi, o).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
        let sign0 = offset_measure(&xi, 0).unwrap().signum();
        for o in -3i64..=3 {
            let expected = if o.rem_euclid(2) == 0 { sign0 } else { -sign0 };
            assert_eq!(offset_measure(&xi, o).unwrap().signum(), expected, "o={o}");
        }
    }

    #[test]
    fn reproduces_the_kernel_ratio_for_short_horizons() {
        for (points, t_star) in [(vec![0.5f64, 2.0, 4.4], 0.25), (vec![1.0, 3.2], 0.5)] {
            let xi = PointConfiguration::new(points, 1.0, t_star).unwrap();
            let x: Vec<f64> = xi.points().iter().map(|u| u + 0.1).collect();
            let d = offset_decomposition(&xi, 0.4 * t_star, &x).unwrap();
            assert!(d.residual() < 1e-8 * d.kernel_ratio.abs(), "{d:?}");
        }
    }

    #[test]
    fn long_horizons_show_the_missing_windings() {
        let xi = PointConfiguration::new(vec![0.5f64, 2.0, 4.4], 1.0, 2.0).unwrap();
        let d = offset_decomposition(&xi, 0.5, &[0.7, 2.2, 4.1]).unwrap();
        assert!(d.residual() > 1e-4 * d.kernel_ratio.abs(), "{d:?}");
    }
}
