use num_complex::Complex;

use super::{ModularParam, SeriesPolicy, ThetaJet, ThetaKind};
use crate::error::{Error, Result};
use crate::scalar::{cimag, creal, Real, C};

/// Value of `theta_kind(v; tau)`.
pub fn theta<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    policy: &SeriesPolicy<T>,
) -> Result<C<T>> {
    Ok(theta_jet(kind, v, tau, policy)?.value)
}

/// Value and first two `v`-derivatives of `theta_kind(v; tau)`.
///
/// For `Im tau < policy.im_tau_switch` the real part of `tau` is reduced to
/// `[-1/2, 1/2]` and the series is summed at `-1/tau`.
pub fn theta_jet<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    policy: &SeriesPolicy<T>,
) -> Result<ThetaJet<C<T>>> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::NonFinite { context: "theta argument" });
    }
    if tau.im() >= policy.im_tau_switch {
        return theta_series_jet(kind, v, tau, policy);
    }
    let shift = tau.tau().re.round();
    let reduced = ModularParam::new(tau.tau() - creal(shift))?;
    let odd_shift = shift.to_i64().is_some_and(|m| m.rem_euclid(2) == 1);
    let (inner_kind, phase) = match kind {
        ThetaKind::One | ThetaKind::Two => {
            let angle = T::FRAC_PI_4() * shift;
            (kind, Complex::from_polar(T::one(), angle))
        }
        ThetaKind::Three if odd_shift => (ThetaKind::Zero, creal(T::one())),
        ThetaKind::Zero if odd_shift => (ThetaKind::Three, creal(T::one())),
        _ => (kind, creal(T::one())),
    };
    let jet = inverted_jet(inner_kind, v, reduced, policy)?;
    Ok(jet.scale(phase))
}

/// `theta_kind(v; tau) = A exp(-i pi v^2 / tau) theta_partner(v/tau; -1/tau)`.
fn inverted_jet<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    policy: &SeriesPolicy<T>,
) -> Result<ThetaJet<C<T>>> {
    let t = tau.tau();
    let one = creal(T::one());
    let dual = ModularParam::new(-one / t)?;
    let partner = match kind {
        ThetaKind::Zero => ThetaKind::Two,
        ThetaKind::Two => ThetaKind::Zero,
        k => k,
    };
    let inner = theta_series_jet(partner, v / t, dual, policy)?;

    let mut amp = (cimag(-T::one()) * t).sqrt().inv();
    if kind == ThetaKind::One {
        amp = amp * cimag(T::one());
    }
    let i_pi = cimag(T::PI());
    let g = (-i_pi * v * v / t).exp();
    let slope = -i_pi * v * T::lit(2.0) / t;
    let g1 = g * slope;
    let g2 = g * (slope * slope - i_pi * T::lit(2.0) / t);
    let inv_t = one / t;
    Ok(ThetaJet {
        value: amp * g * inner.value,
        d1: amp * (g1 * inner.value + g * inner.d1 * inv_t),
        d2: amp
            * (g2 * inner.value
                + g1 * inner.d1 * inv_t * T::lit(2.0)
                + g * inner.d2 * inv_t * inv_t),
    })
}

/// Direct nome-series evaluation without any modular transformation.
pub fn theta_series_jet<T: Real>(
    kind: ThetaKind,
    v: C<T>,
    tau: ModularParam<T>,
    policy: &SeriesPolicy<T>,
) -> Result<ThetaJet<C<T>>> {
    let pi = T::PI();
    let i_pi_tau = cimag(pi) * tau.tau();
    let two = T::lit(2.0);
    let zero = creal(T::zero());

    let (mut val, mut d1, mut d2, log_pre) = match kind {
        ThetaKind::One | ThetaKind::Two => {
            (zero, zero, zero, i_pi_tau * T::lit(0.25) + creal(two.ln()))
        }
        ThetaKind::Zero | ThetaKind::Three => (creal(T::one()), zero, zero, creal(two.ln())),
    };

    let mut small = 0usize;
    for k in 1..=policy.max_terms {
        let kf = T::count(k);
        let (exponent, freq, negative) = match kind {
            ThetaKind::One => (kf * (kf - T::one()), (two * kf - T::one()) * pi, k % 2 == 0),
            ThetaKind::Two => (kf * (kf - T::one()), (two * kf - T::one()) * pi, false),
            ThetaKind::Three => (kf * kf, two * kf * pi, false),
            ThetaKind::Zero => (kf * kf, two * kf * pi, k % 2 == 1),
        };
        let log_a = log_pre + i_pi_tau * exponent;
        let (s, c) = sin_cos_scaled(log_a, v * freq);
        let (s, c) = if negative { (-s, -c) } else { (s, c) };
        let (tv, t1, t2) = match kind {
            ThetaKind::One => (s, c * freq, -s * freq * freq),
            _ => (c, -s * freq, -c * freq * freq),
        };
        val = val + tv;
        d1 = d1 + t1;
        d2 = d2 + t2;
        if !val.re.is_finite() || !val.im.is_finite() {
            return Err(Error::NonFinite { context: "theta series" });
        }
        let negligible = tv.norm() <= policy.threshold(val.norm())
            && t1.norm() <= policy.threshold(d1.norm())
            && t2.norm() <= policy.threshold(d2.norm());
        if negligible {
            small += 1;
            if small >= 3 {
                return Ok(ThetaJet { value: val, d1, d2 });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}

/// `(exp(log_a) sin(w), exp(log_a) cos(w))` without intermediate overflow when
/// `|Im w|` is large.
fn sin_cos_scaled<T: Real>(log_a: C<T>, w: C<T>) -> (C<T>, C<T>) {
    if w.im.abs() < T::lit(300.0) {
        let a = log_a.exp();
        (a * w.sin(), a * w.cos())
    } else {
        let i = cimag(T::one());
        let plus = (log_a + i * w).exp();
        let minus = (log_a - i * w).exp();
        let half = T::lit(0.5);
        ((plus - minus) * (-i * half), (plus + minus) * half)
    }
}

/// Distance from `v` to the nearest zero of `theta_kind(.; tau)`.
pub fn zero_distance<T: Real>(kind: ThetaKind, v: C<T>, tau: ModularParam<T>) -> T {
    let t = tau.tau();
    let half = T::lit(0.5);
    let offset = match kind {
        ThetaKind::One => creal(T::zero()),
        ThetaKind::Two => creal(half),
        ThetaKind::Three => creal(half) + t * half,
        ThetaKind::Zero => t * half,
    };
    let w = v - offset;
    let n0 = (w.im / t.im).round();
    let mut best = T::infinity();
    for dn in [-T::one(), T::zero(), T::one()] {
        let shifted = w - t * (n0 + dn);
        let m0 = shifted.re.round();
        for dm in [-T::one(), T::zero(), T::one()] {
            best = best.min((shifted - creal(m0 + dm)).norm());
        }
    }
    best
}
