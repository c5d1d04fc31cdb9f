//! Residual evaluators for the classical theta identities.

use super::{
    log_dedekind_eta, theta, theta_jet, theta_series_jet, ModularParam, SeriesPolicy, ThetaKind,
};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::{cimag, creal, Real, C};

/// Two sides of an identity and their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual<T> {
    pub lhs: C<T>,
    pub rhs: C<T>,
    pub abs: T,
    /// `abs / max(|lhs|, |rhs|)`.
    pub rel: T,
}

impl<T: Real> IdentityResidual<T> {
    pub fn new(lhs: C<T>, rhs: C<T>) -> Self {
        let abs = (lhs - rhs).norm();
        let scale = lhs.norm().max(rhs.norm());
        let rel = if scale > T::zero() { abs / scale } else { abs };
        Self { lhs, rhs, abs, rel }
    }
}

/// `|d theta / d tau - (1/(4 pi i)) d^2 theta / dv^2|`, with the `tau`
/// derivative from a fourth-order central difference of step `h`.
pub fn theta_heat_equation_residual<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    h: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let at = |dt: T| -> Result<C<T>> {
        theta(kind, v, ModularParam::new(tau.tau() + creal(dt))?, policy)
    };
    let d_tau = (at(-h * T::lit(2.0))? - at(-h)? * T::lit(8.0) + at(h)? * T::lit(8.0)
        - at(h * T::lit(2.0))?)
        / (h * T::lit(12.0));
    let jet = theta_jet(kind, v, tau, policy)?;
    let rhs = jet.d2 / cimag(T::lit(4.0) * T::PI());
    Ok((d_tau - rhs).norm())
}

/// Compares the direct series at `tau` with the imaginary-transformed
/// expression evaluated at `-1/tau`.
pub fn jacobi_imaginary_residual<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    policy: &SeriesPolicy<T>,
) -> Result<IdentityResidual<T>> {
    let direct = SeriesPolicy {
        im_tau_switch: T::zero(),
        ..*policy
    };
    let transformed = SeriesPolicy {
        im_tau_switch: T::infinity(),
        ..*policy
    };
    let lhs = theta_series_jet(kind, v, tau, &direct)?.value;
    let rhs = theta_jet(kind, v, tau, &transformed)?.value;
    Ok(IdentityResidual::new(lhs, rhs))
}

/// Residual of the determinant identities
///
/// * `N` odd: `det[theta3(x_j + a - k/N; tau)] = N^(N/2) eta(N tau)^(-(N-1)(N-2)/2)
///   theta3(sum (x_j + a); N tau) prod_{j<k} theta1(x_k - x_j; N tau)`
/// * `N` even: the same with `theta1` in the determinant and `theta0` on the right.
pub fn forrester_residual<T: Real>(
    tau: ModularParam<T>,
    x: &[C<T>],
    alpha: C<T>,
    policy: &SeriesPolicy<T>,
) -> Result<IdentityResidual<T>> {
    let n = x.len();
    if n == 0 {
        return Err(invalid("x", "need at least one variable"));
    }
    let nf = T::count(n);
    let (det_kind, rhs_kind) = if n % 2 == 1 {
        (ThetaKind::Three, ThetaKind::Three)
    } else {
        (ThetaKind::One, ThetaKind::Zero)
    };
    let mut entries = Vec::with_capacity(n * n);
    for xj in x {
        for k in 1..=n {
            entries.push(theta(det_kind, *xj + alpha - creal(T::count(k) / nf), tau, policy)?);
        }
    }
    let lhs = Matrix::from_fn(n, |i, j| entries[i * n + j]).determinant();

    let big = tau.scaled(n);
    let exponent = -(nf - T::one()) * (nf - T::lit(2.0)) / T::lit(2.0);
    let eta_pow = (log_dedekind_eta(big, policy)? * exponent).exp();
    let shifted_sum = x.iter().fold(creal(T::zero()), |acc, xj| acc + *xj + alpha);
    let mut rhs = eta_pow * nf.powf(nf / T::lit(2.0)) * theta(rhs_kind, shifted_sum, big, policy)?;
    for j in 0..n {
        for k in j + 1..n {
            rhs = rhs * theta(ThetaKind::One, x[k] - x[j], big, policy)?;
        }
    }
    Ok(IdentityResidual::new(lhs, rhs))
}
