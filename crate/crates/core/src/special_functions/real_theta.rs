use super::{SeriesPolicy, ThetaJet, ThetaKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Jet of `theta_kind(v; i * im_tau)` for real `v`.
///
/// For `im_tau >= policy.im_tau_switch` the real nome series is summed;
/// otherwise the Poisson-resummed Gaussian form
/// `im_tau^(-1/2) sum_n c_n exp(-pi (v - n - shift)^2 / im_tau)`, which is the
/// winding-sum representation of the wrapped heat kernel.
pub fn theta_real_jet<T: Real>(
    kind: ThetaKind,
    v: T,
    im_tau: T,
    policy: &SeriesPolicy<T>,
) -> Result<ThetaJet<T>> {
    let (jet, log_factor) = scaled_jet(kind, v, im_tau, policy)?;
    Ok(jet.scale(log_factor.exp()))
}

/// `log|theta|`, its sign and the ratios `theta'/theta`, `theta''/theta`.
///
/// Computed with the dominant term factored out, so it stays finite when the
/// value itself under- or overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealLogJet<T> {
    pub log_abs: T,
    pub sign: T,
    pub d1_ratio: T,
    pub d2_ratio: T,
}

impl<T: Real> RealLogJet<T> {
    /// `(log theta)'' = theta''/theta - (theta'/theta)^2`.
    pub fn log_d2(&self) -> T {
        self.d2_ratio - self.d1_ratio * self.d1_ratio
    }
}

pub fn theta_real_log_jet<T: Real>(
    kind: ThetaKind,
    v: T,
    im_tau: T,
    policy: &SeriesPolicy<T>,
) -> Result<RealLogJet<T>> {
    let (jet, log_factor) = scaled_jet(kind, v, im_tau, policy)?;
    Ok(RealLogJet {
        log_abs: jet.value.abs().ln() + log_factor,
        sign: jet.value.signum(),
        d1_ratio: jet.d1 / jet.value,
        d2_ratio: jet.d2 / jet.value,
    })
}

/// Jet divided by `exp(log_factor)`.
fn scaled_jet<T: Real>(
    kind: ThetaKind,
    v: T,
    im_tau: T,
    policy: &SeriesPolicy<T>,
) -> Result<(ThetaJet<T>, T)> {
    if !v.is_finite() {
        return Err(Error::NonFinite { context: "theta argument" });
    }
    if !(im_tau > T::zero()) || !im_tau.is_finite() {
        return Err(Error::NonPositiveImTau {
            im_tau: im_tau.as_f64(),
        });
    }
    // Reduce to [-1/2, 1/2]; theta1 and theta2 flip sign per unit shift.
    let shift = v.round();
    let reduced = v - shift;
    let odd_shift = shift.to_i64().is_some_and(|m| m.rem_euclid(2) == 1);
    let flip = odd_shift && matches!(kind, ThetaKind::One | ThetaKind::Two);
    let (jet, log_factor) = if im_tau >= policy.im_tau_switch {
        nome_series(kind, reduced, im_tau, policy)?
    } else {
        gaussian_series(kind, reduced, im_tau, policy)?
    };
    Ok((if flip { jet.scale(-T::one()) } else { jet }, log_factor))
}

fn nome_series<T: Real>(
    kind: ThetaKind,
    v: T,
    im_tau: T,
    policy: &SeriesPolicy<T>,
) -> Result<(ThetaJet<T>, T)> {
    let pi = T::PI();
    let two = T::lit(2.0);
    let (mut val, log_factor) = match kind {
        ThetaKind::One | ThetaKind::Two => (T::zero(), -pi * im_tau * T::lit(0.25)),
        _ => (T::one(), T::zero()),
    };
    let (mut d1, mut d2) = (T::zero(), T::zero());
    let mut small = 0usize;
    for k in 1..=policy.max_terms {
        let kf = T::count(k);
        let (exponent, freq, negative) = match kind {
            ThetaKind::One => (kf * (kf - T::one()), (two * kf - T::one()) * pi, k % 2 == 0),
            ThetaKind::Two => (kf * (kf - T::one()), (two * kf - T::one()) * pi, false),
            ThetaKind::Three => (kf * kf, two * kf * pi, false),
            ThetaKind::Zero => (kf * kf, two * kf * pi, k % 2 == 1),
        };
        let mut a = two * (-pi * im_tau * exponent).exp();
        if negative {
            a = -a;
        }
        let (s, c) = (freq * v).sin_cos();
        let (tv, t1, t2) = match kind {
            ThetaKind::One => (a * s, a * freq * c, -a * freq * freq * s),
            _ => (a * c, -a * freq * s, -a * freq * freq * c),
        };
        val = val + tv;
        d1 = d1 + t1;
        d2 = d2 + t2;
        if negligible(policy, (tv, t1, t2), (val, d1, d2)) {
            small += 1;
            if small >= 3 {
                return Ok((ThetaJet { value: val, d1, d2 }, log_factor));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}

fn gaussian_series<T: Real>(
    kind: ThetaKind,
    v: T,
    s: T,
    policy: &SeriesPolicy<T>,
) -> Result<(ThetaJet<T>, T)> {
    let pi = T::PI();
    let half = T::lit(0.5);
    let c = T::lit(2.0) * pi / s;
    // Every Gaussian is measured relative to the largest one.
    let reference = match kind {
        ThetaKind::Three | ThetaKind::Two => v,
        _ => v.abs() - half,
    };
    let ref_sq = reference * reference;
    let log_factor = -pi * ref_sq / s - s.ln() * half;
    let g = |y: T| (-pi * (y * y - ref_sq) / s).exp();
    // Derivative weights of a single Gaussian g(v - center).
    let jet_of = |y: T| {
        let gy = g(y);
        let slope = -c * y;
        (gy, slope * gy, (slope * slope - c) * gy)
    };

    let (mut val, mut d1, mut d2) = match kind {
        ThetaKind::Three | ThetaKind::Two => jet_of(v),
        _ => (T::zero(), T::zero(), T::zero()),
    };
    // theta1 is summed at |v| and symmetrised afterwards to keep the pair
    // differences free of cancellation.
    let a = v.abs();
    let sign = if v < T::zero() { -T::one() } else { T::one() };

    let mut small = 0usize;
    for k in 1..=policy.max_terms {
        let kf = T::count(k);
        let alternating = if k % 2 == 1 { -T::one() } else { T::one() };
        let (tv, t1, t2) = match kind {
            ThetaKind::Three | ThetaKind::Two => {
                let w = if kind == ThetaKind::Two { alternating } else { T::one() };
                let (l0, l1, l2) = jet_of(v - kf);
                let (r0, r1, r2) = jet_of(v + kf);
                (w * (l0 + r0), w * (l1 + r1), w * (l2 + r2))
            }
            ThetaKind::Zero => {
                let m = kf - half;
                let (l0, l1, l2) = jet_of(v - m);
                let (r0, r1, r2) = jet_of(v + m);
                (l0 + r0, l1 + r1, l2 + r2)
            }
            ThetaKind::One => {
                let m = kf - half;
                let w = -alternating;
                let lower = g(a - m);
                let upper = g(a + m);
                let diff = -lower * (-T::lit(4.0) * pi * m * a / s).exp_m1();
                let sum = lower + upper;
                let p1 = -c * (a * diff - m * sum);
                let p2 = c * c * ((a * a + m * m) * diff - T::lit(2.0) * a * m * sum) - c * diff;
                (w * diff, w * p1, w * p2)
            }
        };
        val = val + tv;
        d1 = d1 + t1;
        d2 = d2 + t2;
        if negligible(policy, (tv, t1, t2), (val, d1, d2)) {
            small += 1;
            if small >= 3 {
                let jet = if kind == ThetaKind::One {
                    ThetaJet {
                        value: val * sign,
                        d1,
                        d2: d2 * sign,
                    }
                } else {
                    ThetaJet { value: val, d1, d2 }
                };
                return Ok((jet, log_factor));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}

fn negligible<T: Real>(policy: &SeriesPolicy<T>, term: (T, T, T), sum: (T, T, T)) -> bool {
    term.0.abs() <= policy.threshold(sum.0.abs())
        && term.1.abs() <= policy.threshold(sum.1.abs())
        && term.2.abs() <= policy.threshold(sum.2.abs())
}
