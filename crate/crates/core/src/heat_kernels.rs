//! Brownian transition densities on the line and on a circle of radius `r`.
//!
//! The wrapped kernels are
//!
//! * `p_{+1}(t, y | x) = sum_w p(t, y + 2 pi r w | x) = theta3(v; i t / 2 pi r^2) / 2 pi r`
//! * `p_{-1}(t, y | x) = sum_w (-1)^w p(t, y + 2 pi r w | x) = theta2(v; i t / 2 pi r^2) / 2 pi r`
//!
//! with `v = (y - x) / 2 pi r`. Time `t = 0` is always rejected; initial
//! conditions are handled by the callers.

use crate::error::{invalid, Error, Result};
use crate::geometry::{CircleGeom, Parity};
use crate::linalg::Matrix;
use crate::quadrature::periodic_trapezoid;
use crate::scalar::{cimag, creal, Real, C};
use crate::special_functions::{
    theta_jet, theta_real_jet, theta_real_log_jet, villat, ModularParam, RealLogJet, SeriesPolicy,
    ThetaKind,
};

fn check_time<T: Real>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("must be positive and finite, got {t}")))
    }
}

fn check_lengths<T>(y: &[T], x: &[T]) -> Result<()> {
    if y.len() != x.len() || y.is_empty() {
        return Err(invalid(
            "x",
            format!("configurations must be non-empty with equal lengths ({} vs {})", y.len(), x.len()),
        ));
    }
    Ok(())
}

/// Theta function representing the wrapped kernel of a given parity.
pub fn kernel_theta_kind(parity: Parity) -> ThetaKind {
    match parity {
        Parity::Plus => ThetaKind::Three,
        Parity::Minus => ThetaKind::Two,
    }
}

/// Gaussian density `exp(-(y - x)^2 / 2t) / sqrt(2 pi t)`.
pub fn p_bm<T: Real>(t: T, y: T, x: T) -> Result<T> {
    check_time(t)?;
    let d = y - x;
    Ok((-d * d / (T::lit(2.0) * t)).exp() / (T::TAU() * t).sqrt())
}

/// Wrapped kernel `p_parity(t, y | x)` on the circle.
///
/// Sums the winding (Gaussian) form when `t / 2 pi r^2 < policy.im_tau_switch`
/// and the theta nome series otherwise, so each representation is used where
/// it converges fastest.
pub fn p_wrapped<T: Real>(
    parity: Parity,
    t: T,
    y: T,
    x: T,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_time(t)?;
    let v = (y - x) / geom.period();
    let jet = theta_real_jet(kernel_theta_kind(parity), v, geom.kernel_im_tau(t), policy)?;
    Ok(jet.value / geom.period())
}

/// `log|p|`, sign and `y`-derivative ratios of the wrapped kernel.
pub fn p_wrapped_log_jet<T: Real>(
    parity: Parity,
    t: T,
    y: T,
    x: T,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<RealLogJet<T>> {
    check_time(t)?;
    let period = geom.period();
    let jet = theta_real_log_jet(kernel_theta_kind(parity), (y - x) / period, geom.kernel_im_tau(t), policy)?;
    Ok(RealLogJet {
        log_abs: jet.log_abs - period.ln(),
        sign: jet.sign,
        d1_ratio: jet.d1_ratio / period,
        d2_ratio: jet.d2_ratio / (period * period),
    })
}

/// Wrapped kernel through the nome series only.
pub fn p_wrapped_theta<T: Real>(
    parity: Parity,
    t: T,
    y: T,
    x: T,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let series_only = SeriesPolicy {
        im_tau_switch: T::zero(),
        ..*policy
    };
    p_wrapped(parity, t, y, x, geom, &series_only)
}

/// Wrapped kernel as an explicit winding sum.
///
/// The winding range `|w| <= W` is chosen so that the Gaussian tail bound
/// `2 g(L) (1 + sqrt(2 pi t) / 4 pi r)` stays below `policy.abs_tol`, where
/// `L` is the distance of the first omitted image.
pub fn p_wrapped_winding<T: Real>(
    parity: Parity,
    t: T,
    y: T,
    x: T,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_time(t)?;
    let h = geom.period();
    let d = y - x;
    let k = (d / h).round();
    let d0 = d - k * h;
    let outer = parity.power::<T>(k.to_i64().unwrap_or(0));
    let two = T::lit(2.0);
    let norm = (T::TAU() * t).sqrt();
    let budget = policy.abs_tol * norm / (two * (T::one() + norm / (two * h)));
    let reach = if budget < T::one() {
        (two * t * -budget.ln()).sqrt()
    } else {
        T::zero()
    };
    let w_max = ((reach + d0.abs()) / h).ceil().to_usize().unwrap_or(usize::MAX);
    if w_max > policy.max_terms {
        return Err(Error::SeriesNotConverged {
            max_terms: policy.max_terms,
        });
    }
    let gauss = |z: T| (-z * z / (two * t)).exp();
    let mut acc = gauss(d0);
    for w in 1..=w_max {
        let wf = T::count(w);
        let s = parity.power::<T>(w as i64);
        acc = acc + s * (gauss(d0 + wf * h) + gauss(d0 - wf * h));
    }
    Ok(outer * acc / norm)
}

/// Analytic continuation of the wrapped kernel to complex `y` and `x`,
/// obtained by evaluating the theta representation at complex argument.
pub fn p_wrapped_complex<T: Real>(
    parity: Parity,
    t: T,
    y: C<T>,
    x: C<T>,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<C<T>> {
    check_time(t)?;
    let period = geom.period();
    let tau = ModularParam::new(cimag(geom.kernel_im_tau(t)))?;
    let jet = theta_jet(kernel_theta_kind(parity), (y - x) / period, tau, policy)?;
    Ok(jet.value / creal(period))
}

/// `p_{-1}(t, pi r | x) = theta1(x / 2 pi r; i t / 2 pi r^2) / 2 pi r`.
pub fn p_minus_pinned<T: Real>(t: T, x: T, geom: &CircleGeom<T>, policy: &SeriesPolicy<T>) -> Result<T> {
    check_time(t)?;
    let jet = theta_real_jet(ThetaKind::One, x / geom.period(), geom.kernel_im_tau(t), policy)?;
    Ok(jet.value / geom.period())
}

/// `d/dx log p_{-1}(t, pi r | x)`.
pub fn p_minus_pinned_log_dx<T: Real>(
    t: T,
    x: T,
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_time(t)?;
    let jet = theta_real_log_jet(ThetaKind::One, x / geom.period(), geom.kernel_im_tau(t), policy)?;
    Ok(jet.d1_ratio / geom.period())
}

/// Karlin-McGregor determinant `det[p(t, y_j | x_k)]` on the line.
pub fn km_det<T: Real>(t: T, y: &[T], x: &[T]) -> Result<T> {
    check_time(t)?;
    check_lengths(y, x)?;
    let n = y.len();
    let mut entries = Vec::with_capacity(n * n);
    for &yj in y {
        for &xk in x {
            entries.push(p_bm(t, yj, xk)?);
        }
    }
    Ok(crate::linalg::determinant(n, entries))
}

/// Matrix `[p_{p(N)}(t, y_j | x_k)]` with the parity fixed by `N`.
pub fn wrapped_matrix<T: Real>(
    t: T,
    y: &[T],
    x: &[T],
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<Matrix<T>> {
    check_time(t)?;
    check_lengths(y, x)?;
    let n = y.len();
    let parity = Parity::of_count(n);
    let mut entries = Vec::with_capacity(n * n);
    for &yj in y {
        for &xk in x {
            entries.push(p_wrapped(parity, t, yj, xk, geom, policy)?);
        }
    }
    Ok(Matrix::from_fn(n, |i, j| entries[i * n + j]))
}

/// Alcove transition determinant `q_N(t, y | x) = det[p_{p(N)}(t, y_j | x_k)]`.
pub fn q_r_n<T: Real>(
    t: T,
    y: &[T],
    x: &[T],
    geom: &CircleGeom<T>,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    Ok(wrapped_matrix(t, y, x, geom, policy)?.determinant())
}

/// Outcome of a semigroup check; `skipped` is set when `t - s` is too small
/// for the quadrature to resolve the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupResidual<T> {
    pub residual: T,
    pub skipped: bool,
}

/// `|int p(t - s, z | y) p(s, y | x) dy - p(t, z | x)|` by the periodic
/// trapezoid rule on `nodes` points.
#[allow(clippy::too_many_arguments)]
pub fn chapman_kolmogorov_residual<T: Real>(
    parity: Parity,
    s: T,
    t: T,
    x: T,
    z: T,
    geom: &CircleGeom<T>,
    nodes: usize,
    policy: &SeriesPolicy<T>,
) -> Result<SemigroupResidual<T>> {
    check_time(s)?;
    if !(t > s) {
        return Err(invalid("t", format!("must exceed s = {s}, got {t}")));
    }
    // The trapezoid rule needs a few nodes per kernel width.
    let spacing = geom.period() / T::count(nodes);
    let narrowest = (t - s).min(s).sqrt();
    if narrowest < T::lit(2.0) * spacing {
        return Ok(SemigroupResidual {
            residual: T::zero(),
            skipped: true,
        });
    }
    let mut failure = None;
    let integral = periodic_trapezoid(T::zero(), geom.period(), nodes, |y| {
        let a = p_wrapped(parity, t - s, z, y, geom, policy);
        let b = p_wrapped(parity, s, y, x, geom, policy);
        match (a, b) {
            (Ok(a), Ok(b)) => a * b,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                T::zero()
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let direct = p_wrapped(parity, t, z, x, geom, policy)?;
    Ok(SemigroupResidual {
        residual: (integral - direct).abs(),
        skipped: false,
    })
}

/// `|K_q(e^{ix}) - 2i d/dx log p_{-1}(s, pi | x)|` on the unit circle with
/// `q = exp(-s / 2)`.
pub fn villat_link_residual<T: Real>(s: T, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    let geom = CircleGeom::new(T::one())?;
    let q = (-s / T::lit(2.0)).exp();
    let k = villat(q, C::from_polar(T::one(), x), policy)?;
    let log_dx = p_minus_pinned_log_dx(s, x, &geom, policy)?;
    Ok((k - cimag(T::lit(2.0) * log_dx)).norm())
}
