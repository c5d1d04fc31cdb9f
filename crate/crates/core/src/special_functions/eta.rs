use super::{ModularParam, SeriesPolicy};
use crate::error::{Error, Result};
use crate::scalar::{cimag, creal, Real, C};

/// Dedekind eta `exp(i pi tau / 12) prod_{n>=1} (1 - exp(2 pi i n tau))`.
pub fn dedekind_eta<T: Real>(tau: ModularParam<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    Ok(log_dedekind_eta(tau, policy)?.exp())
}

/// Branch of `log eta(tau)` continuous in the upper half plane, real on the
/// imaginary axis.
pub fn log_dedekind_eta<T: Real>(tau: ModularParam<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    if tau.im() >= policy.im_tau_switch {
        return log_eta_series(tau.tau(), policy);
    }
    // eta(tau + m) = exp(i pi m / 12) eta(tau); eta(tau) = (-i tau)^(-1/2) eta(-1/tau).
    let (shift, reduced) = reduce(tau)?;
    let inverted = ModularParam::new(-creal(T::one()) / reduced.tau())?;
    let half = T::lit(0.5);
    let log_amp = -(cimag(-T::one()) * reduced.tau()).ln() * half;
    Ok(cimag(T::PI() * shift / T::lit(12.0)) + log_amp + log_eta_series(inverted.tau(), policy)?)
}

/// `d/dtau log eta(tau) = (i pi / 12) (1 - 24 sum n q^(2n) / (1 - q^(2n)))`.
pub fn log_eta_derivative<T: Real>(tau: ModularParam<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    if tau.im() >= policy.im_tau_switch {
        return log_eta_derivative_series(tau.tau(), policy);
    }
    let (_, reduced) = reduce(tau)?;
    let t = reduced.tau();
    let one = creal(T::one());
    let inverted = ModularParam::new(-one / t)?;
    let inner = log_eta_derivative_series(inverted.tau(), policy)?;
    Ok(-one / (t * T::lit(2.0)) + inner / (t * t))
}

/// `eta1 = zeta(omega1)` for the lattice with half-periods `omega1`, `omega3`.
pub fn eta1<T: Real>(omega1: C<T>, omega3: C<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    let tau = ModularParam::new(omega3 / omega1)?;
    let l = log_eta_derivative(tau, policy)?;
    Ok(cimag(-T::PI()) / omega1 * l)
}

fn reduce<T: Real>(tau: ModularParam<T>) -> Result<(T, ModularParam<T>)> {
    let shift = tau.tau().re.round();
    Ok((shift, ModularParam::new(tau.tau() - creal(shift))?))
}

fn log_eta_series<T: Real>(tau: C<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    let two_pi_i_tau = cimag(T::TAU()) * tau;
    let mut acc = cimag(T::PI()) * tau / T::lit(12.0);
    let mut small = 0;
    for n in 1..=policy.max_terms {
        let w = (two_pi_i_tau * T::count(n)).exp();
        let term = (creal(T::one()) - w).ln();
        acc = acc + term;
        if term.norm() <= policy.threshold(acc.norm()) {
            small += 1;
            if small >= 3 {
                return Ok(acc);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}

fn log_eta_derivative_series<T: Real>(tau: C<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    let two_pi_i_tau = cimag(T::TAU()) * tau;
    let one = creal(T::one());
    let mut sum = creal(T::zero());
    let mut small = 0;
    for n in 1..=policy.max_terms {
        let nf = T::count(n);
        let w = (two_pi_i_tau * nf).exp();
        let term = w * nf / (one - w);
        sum = sum + term;
        if term.norm() <= policy.threshold(sum.norm()) {
            small += 1;
            if small >= 3 {
                return Ok(cimag(T::PI() / T::lit(12.0)) * (one - sum * T::lit(24.0)));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}
