//! Time-dependent elliptic potentials.
//!
//! The building block is `U_N(t, x) = -log theta1(x / 2 pi r; N tau(t))` on
//! `(0, 2 pi r)`. Its derivative `U_N'` extends to an odd, `2 pi r`-periodic
//! function with poles on the lattice `2 pi r Z`; the drift code uses that
//! extension through [`u_n_dx_extended`].

use crate::error::{Error, Result};
use crate::geometry::EllipticClock;
use crate::heat_kernels::q_r_n;
use crate::scalar::{cimag, creal, Real, C};
use crate::special_functions::{
    log_dedekind_eta, theta_real_log_jet, Lattice, ModularParam, RealLogJet, SeriesPolicy, ThetaKind,
};

pub use crate::special_functions::forrester_residual as forrester_identity_residual;

fn theta1_log_jet<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<RealLogJet<T>> {
    let period = clock.geometry().circle().period();
    theta_real_log_jet(ThetaKind::One, x / period, clock.im_tau_n(n), policy)
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(crate::error::invalid("n", "particle count must be at least 1"))
    } else {
        Ok(())
    }
}

/// Converts a complex result known to be real, rejecting a significant
/// imaginary part.
pub(crate) fn expect_real<T: Real>(z: C<T>) -> Result<T> {
    if z.im.abs() <= T::lit(1e-10) * z.re.abs() + T::lit(1e-13) {
        Ok(z.re)
    } else {
        Err(Error::NotReal {
            imag: z.im.as_f64(),
            scale: z.re.abs().as_f64(),
        })
    }
}

/// `U_N(t, x)` for `x` strictly inside `(0, 2 pi r)`.
pub fn u_n<T: Real>(clock: &EllipticClock<T>, n: usize, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    check_count(n)?;
    clock.geometry().circle().check_interval(x)?;
    let jet = theta1_log_jet(clock, n, x, policy)?;
    if jet.sign <= T::zero() {
        return Err(Error::NonFinite { context: "theta1 not positive inside the interval" });
    }
    Ok(-jet.log_abs)
}

/// `U_N'(t, x) = -(1 / 2 pi r) theta1'/theta1`.
pub fn u_n_dx<T: Real>(clock: &EllipticClock<T>, n: usize, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    clock.geometry().circle().check_interval(x)?;
    u_n_dx_extended(clock, n, x, policy)
}

/// Odd periodic extension of `U_N'` to the whole line (poles at `2 pi r Z`).
pub fn u_n_dx_extended<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_count(n)?;
    let jet = theta1_log_jet(clock, n, x, policy)?;
    let value = -jet.d1_ratio / clock.geometry().circle().period();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::PoleProximity { distance: 0.0 })
    }
}

/// `U_N''(t, x) = -(1 / 4 pi^2 r^2) (log theta1)''`.
pub fn u_n_dxx<T: Real>(clock: &EllipticClock<T>, n: usize, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    clock.geometry().circle().check_interval(x)?;
    u_n_dxx_extended(clock, n, x, policy)
}

pub(crate) fn u_n_dxx_extended<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_count(n)?;
    let jet = theta1_log_jet(clock, n, x, policy)?;
    let period = clock.geometry().circle().period();
    Ok(-jet.log_d2() / (period * period))
}

/// `dU_N/dt = (N / 8 pi^2 r^2) theta1''/theta1`, from the heat equation.
pub fn u_n_dt<T: Real>(clock: &EllipticClock<T>, n: usize, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    check_count(n)?;
    clock.geometry().circle().check_interval(x)?;
    let jet = theta1_log_jet(clock, n, x, policy)?;
    let r = clock.geometry().r();
    Ok(T::count(n) * jet.d2_ratio / (T::lit(8.0) * T::PI() * T::PI() * r * r))
}

/// `dU_N/dt` by a fourth-order central difference in `t` with step `h`.
pub fn u_n_dt_finite_difference<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    x: T,
    h: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let at = |dt: T| -> Result<T> { u_n(&clock.at(clock.t() + dt)?, n, x, policy) };
    let two = T::lit(2.0);
    Ok((at(-two * h)? - T::lit(8.0) * at(-h)? + T::lit(8.0) * at(h)? - at(two * h)?) / (T::lit(12.0) * h))
}

/// Lattice with half-periods `pi r` and `N omega3(t)`.
pub fn potential_lattice<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    policy: &SeriesPolicy<T>,
) -> Result<Lattice<T>> {
    check_count(n)?;
    let omega1 = creal(T::PI() * clock.geometry().r());
    let omega3 = cimag(T::count(n) * clock.im_omega3());
    Lattice::new(omega1, omega3, *policy)
}

/// `U_N' = -zeta(x) + x eta1 / pi r` on the lattice of [`potential_lattice`].
pub fn u_n_dx_weierstrass<T: Real>(lattice: &Lattice<T>, x: T) -> Result<T> {
    let omega1 = lattice.omega1();
    let z = creal(x);
    expect_real(-lattice.zeta(z)? + z * lattice.eta1() / omega1)
}

/// `U_N'' = wp(x) + eta1 / pi r` on the lattice of [`potential_lattice`].
pub fn u_n_dxx_weierstrass<T: Real>(lattice: &Lattice<T>, x: T) -> Result<T> {
    expect_real(lattice.wp(creal(x))? + lattice.eta1() / lattice.omega1())
}

/// `U_N' = -(1/2r) cot(x/2r) - (2/r) sum_n e^{-n s}/(1 - e^{-n s}) sin(n x / r)`
/// with `s = N (t_star - t) / r^2`.
pub fn u_n_dx_trigonometric<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_count(n)?;
    let r = clock.geometry().r();
    let s = T::count(n) * clock.remaining() / (r * r);
    let two = T::lit(2.0);
    let mut sum = T::zero();
    let mut small = 0;
    for k in 1..=policy.max_terms {
        let kf = T::count(k);
        let w = (-kf * s).exp();
        let term = w / (T::one() - w) * (kf * x / r).sin();
        sum = sum + term;
        if term.abs() <= policy.threshold(sum.abs()) {
            small += 1;
            if small >= 3 {
                return Ok(-(x / (two * r)).tan().recip() / (two * r) - two / r * sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNotConverged {
        max_terms: policy.max_terms,
    })
}

/// `W_N(t, x) = sum_{j<k} U_N(t, x_k - x_j) + U_N(t, xbar)` on the restricted alcove.
pub fn w_n<T: Real>(clock: &EllipticClock<T>, x: &[T], policy: &SeriesPolicy<T>) -> Result<T> {
    let circle = clock.geometry().circle();
    circle.check_alcove(x)?;
    let n = x.len();
    let mut total = u_n(clock, n, circle.center_of_mass(x), policy)?;
    for j in 0..n {
        for k in j + 1..n {
            total = total + u_n(clock, n, x[k] - x[j], policy)?;
        }
    }
    Ok(total)
}

/// Gradient `dW_N/dx_j = sum_{k != j} U_N'(x_j - x_k) + U_N'(xbar)`, valid for
/// any configuration off the collision and center-of-mass boundaries.
pub fn grad_w_n<T: Real>(clock: &EllipticClock<T>, x: &[T], policy: &SeriesPolicy<T>) -> Result<Vec<T>> {
    let n = x.len();
    check_count(n)?;
    let circle = clock.geometry().circle();
    let center = u_n_dx_extended(clock, n, circle.center_of_mass(x), policy)?;
    let mut grad = vec![center; n];
    for j in 0..n {
        for k in j + 1..n {
            let pair = u_n_dx_extended(clock, n, x[j] - x[k], policy)?;
            grad[j] = grad[j] + pair;
            grad[k] = grad[k] - pair;
        }
    }
    Ok(grad)
}

/// The same gradient written without `kappa_N`, through
/// `U_N'(xbar) = -(1 / 2 pi r) theta2'/theta2(sum x / 2 pi r; N tau)`.
pub fn grad_w_n_theta_form<T: Real>(
    clock: &EllipticClock<T>,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<Vec<T>> {
    let n = x.len();
    check_count(n)?;
    let period = clock.geometry().circle().period();
    let im = clock.im_tau_n(n);
    let total: T = x.iter().copied().sum();
    let center = theta_real_log_jet(ThetaKind::Two, total / period, im, policy)?;
    let mut grad = Vec::with_capacity(n);
    for j in 0..n {
        let mut g = -center.d1_ratio / period;
        for k in 0..n {
            if k != j {
                let pair = theta_real_log_jet(ThetaKind::One, (x[j] - x[k]) / period, im, policy)?;
                g = g - pair.d1_ratio / period;
            }
        }
        grad.push(g);
    }
    Ok(grad)
}

fn check_dimension<T: Real>(d: T) -> Result<()> {
    if d > T::one() && d.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid("d", format!("must exceed 1, got {d}")))
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid("beta", format!("must be positive, got {beta}")))
    }
}

/// `V_1^(D)(t, x) = ((D - 1)(D - 3) / 8) U_1'(t, x)^2`.
pub fn v_1<T: Real>(clock: &EllipticClock<T>, d: T, x: T, policy: &SeriesPolicy<T>) -> Result<T> {
    check_dimension(d)?;
    let slope = u_n_dx(clock, 1, x, policy)?;
    Ok(v_1_prefactor(d) * slope * slope)
}

pub(crate) fn v_1_prefactor<T: Real>(d: T) -> T {
    (d - T::one()) * (d - T::lit(3.0)) / T::lit(8.0)
}

/// `V_1^(D)` in the Weierstrass form `((D - 1)(D - 3) / 8)(zeta(x) - x eta1 / pi r)^2`.
pub fn v_1_weierstrass<T: Real>(
    clock: &EllipticClock<T>,
    d: T,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_dimension(d)?;
    clock.geometry().circle().check_interval(x)?;
    let lattice = potential_lattice(clock, 1, policy)?;
    let slope = u_n_dx_weierstrass(&lattice, x)?;
    Ok(v_1_prefactor(d) * slope * slope)
}

/// Interaction `V_N^(beta)(t, x)` on the restricted alcove:
///
/// `(beta (beta - 2) N / 8) [sum_{j<k} U'(x_k - x_j)^2 + U'(xbar)^2
///  - ((N - 2) / N) sum_{j<k} U''(x_k - x_j)]`.
pub fn v_n<T: Real>(clock: &EllipticClock<T>, beta: T, x: &[T], policy: &SeriesPolicy<T>) -> Result<T> {
    check_beta(beta)?;
    clock.geometry().circle().check_alcove(x)?;
    v_n_extended(clock, beta, x, policy)
}

pub(crate) fn v_n_extended<T: Real>(
    clock: &EllipticClock<T>,
    beta: T,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let n = x.len();
    let prefactor = beta * (beta - T::lit(2.0)) * T::count(n) / T::lit(8.0);
    if prefactor == T::zero() {
        return Ok(T::zero());
    }
    let circle = clock.geometry().circle();
    let nf = T::count(n);
    let center = u_n_dx_extended(clock, n, circle.center_of_mass(x), policy)?;
    let mut squares = center * center;
    let mut curvature = T::zero();
    for j in 0..n {
        for k in j + 1..n {
            let slope = u_n_dx_extended(clock, n, x[k] - x[j], policy)?;
            squares = squares + slope * slope;
            if n > 2 {
                curvature = curvature + u_n_dxx_extended(clock, n, x[k] - x[j], policy)?;
            }
        }
    }
    Ok(prefactor * (squares - (nf - T::lit(2.0)) / nf * curvature))
}

/// `V_N^(beta)` through Weierstrass zeta and wp.
pub fn v_n_weierstrass<T: Real>(
    clock: &EllipticClock<T>,
    beta: T,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_beta(beta)?;
    let circle = clock.geometry().circle();
    circle.check_alcove(x)?;
    let n = x.len();
    let nf = T::count(n);
    let lattice = potential_lattice(clock, n, policy)?;
    let center = u_n_dx_weierstrass(&lattice, circle.center_of_mass(x))?;
    let mut squares = center * center;
    let mut curvature = T::zero();
    for j in 0..n {
        for k in j + 1..n {
            let slope = u_n_dx_weierstrass(&lattice, x[k] - x[j])?;
            squares = squares + slope * slope;
            curvature = curvature + u_n_dxx_weierstrass(&lattice, x[k] - x[j])?;
        }
    }
    let prefactor = beta * (beta - T::lit(2.0)) * nf / T::lit(8.0);
    Ok(prefactor * (squares - (nf - T::lit(2.0)) / nf * curvature))
}

/// Ground energy `E_{N,0}(t) = -(beta^2 / 16) N (N-1)(N-2) eta1 / pi r` on the
/// lattice with half-periods `pi r`, `N omega3(t)`.
pub fn ground_energy<T: Real>(
    clock: &EllipticClock<T>,
    n: usize,
    beta: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_count(n)?;
    if n < 3 {
        return Ok(T::zero());
    }
    let lattice = potential_lattice(clock, n, policy)?;
    let eta1 = expect_real(lattice.eta1())?;
    let count = T::count(n * (n - 1) * (n - 2));
    Ok(-beta * beta / T::lit(16.0) * count * eta1 / (T::PI() * clock.geometry().r()))
}

fn log_eta_n<T: Real>(clock: &EllipticClock<T>, n: usize, policy: &SeriesPolicy<T>) -> Result<T> {
    let tau = ModularParam::imaginary(clock.im_tau_n(n))?;
    expect_real(log_dedekind_eta(tau, policy)?)
}

/// `C(t) = (eta(N tau(t)) / eta(N tau(0)))^(-beta^2 (N-1)(N-2) / 8)`.
pub fn c_factor<T: Real>(clock: &EllipticClock<T>, n: usize, beta: T, policy: &SeriesPolicy<T>) -> Result<T> {
    check_count(n)?;
    if n < 3 {
        return Ok(T::one());
    }
    let start = clock.at(T::zero())?;
    let exponent = -beta * beta * T::count((n - 1) * (n - 2)) / T::lit(8.0);
    let log_ratio = log_eta_n(clock, n, policy)? - log_eta_n(&start, n, policy)?;
    let value = (exponent * log_ratio).exp();
    if value > T::zero() && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { context: "C(t) factor" })
    }
}

/// `log|h_N(t, x)|` and its sign, for
/// `h_N = eta(N tau)^(-beta (N-1)(N-2)/4) theta1(xbar / 2 pi r; N tau) prod_{j<k} theta1((x_k - x_j) / 2 pi r; N tau)`.
pub fn log_h_n_r<T: Real>(
    clock: &EllipticClock<T>,
    beta: T,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<(T, T)> {
    let n = x.len();
    check_count(n)?;
    let circle = clock.geometry().circle();
    let exponent = -beta * T::count((n - 1) * n.saturating_sub(2)) / T::lit(4.0);
    let mut log_abs = if exponent == T::zero() {
        T::zero()
    } else {
        exponent * log_eta_n(clock, n, policy)?
    };
    let center = theta1_log_jet(clock, n, circle.center_of_mass(x), policy)?;
    log_abs = log_abs + center.log_abs;
    let mut sign = center.sign;
    for j in 0..n {
        for k in j + 1..n {
            let pair = theta1_log_jet(clock, n, x[k] - x[j], policy)?;
            log_abs = log_abs + pair.log_abs;
            sign = sign * pair.sign;
        }
    }
    Ok((log_abs, sign))
}

/// `h_N(t, x)` in product form; zero on the alcove boundary.
pub fn h_n_r_product<T: Real>(
    clock: &EllipticClock<T>,
    beta: T,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let (log_abs, sign) = log_h_n_r(clock, beta, x, policy)?;
    if sign == T::zero() {
        return Ok(T::zero());
    }
    Ok(sign * log_abs.exp())
}

/// `h_N(t, x) = eta(N tau)^(-(beta-2)(N-1)(N-2)/4) (2 pi r / sqrt N)^N q_N(t_star - t, v | x)`
/// with the pinning configuration `v`.
pub fn h_n_r_det<T: Real>(
    clock: &EllipticClock<T>,
    beta: T,
    x: &[T],
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    let n = x.len();
    check_count(n)?;
    let circle = clock.geometry().circle();
    let v = circle.pinning_points(n);
    let q = q_r_n(clock.remaining(), &v, x, circle, policy)?;
    let exponent = -(beta - T::lit(2.0)) * T::count((n - 1) * n.saturating_sub(2)) / T::lit(4.0);
    let eta_factor = if exponent == T::zero() {
        T::one()
    } else {
        (exponent * log_eta_n(clock, n, policy)?).exp()
    };
    let nf = T::count(n);
    Ok(eta_factor * (circle.period() / nf.sqrt()).powi(n as i32) * q)
}

/// Pointwise residual of the operator identity
/// `e^{aU}(d/dt - L)(e^{-aU} f) = (d/dt + H) f`, `a = (D - 1)/2`, with
/// `L g = g''/2 + a (U' g)'` and `H = -1/2 d^2/dx^2 + V_1^(D)`.
///
/// The left side is built from finite differences of `e^{-aU} f`; the test
/// function is the Gaussian bump `f(t, x) = (1 + t/2) exp(-(x - pi r)^2 / 2 (0.3 r)^2)`.
pub fn v_1_operator_residual<T: Real>(
    clock: &EllipticClock<T>,
    d: T,
    x: T,
    policy: &SeriesPolicy<T>,
) -> Result<T> {
    check_dimension(d)?;
    let circle = clock.geometry().circle();
    circle.check_interval(x)?;
    let r = clock.geometry().r();
    let a = (d - T::one()) / T::lit(2.0);
    let width = T::lit(0.3) * r;
    let center = T::PI() * r;
    let half = T::lit(0.5);
    let bump = |t: T, y: T| (T::one() + half * t) * (-(y - center) * (y - center) / (T::lit(2.0) * width * width)).exp();
    // f_t and f_xx in closed form.
    let f = bump(clock.t(), x);
    let f_t = half * (-(x - center) * (x - center) / (T::lit(2.0) * width * width)).exp();
    let z = (x - center) / width;
    let f_xx = f * (z * z - T::one()) / (width * width);

    let g = |t: T, y: T| -> Result<T> {
        let c = clock.at(t)?;
        Ok((-a * u_n(&c, 1, y, policy)?).exp() * bump(t, y))
    };
    let flux = |y: T| -> Result<T> { Ok(u_n_dx(clock, 1, y, policy)? * g(clock.t(), y)?) };
    let hx = T::lit(1e-2) * r;
    let ht = T::lit(1e-2) * clock.remaining().min(T::one());
    let t = clock.t();
    let eight = T::lit(8.0);
    let twelve = T::lit(12.0);
    let two = T::lit(2.0);
    let g_t = if t >= two * ht {
        (g(t - two * ht, x)? - eight * g(t - ht, x)? + eight * g(t + ht, x)? - g(t + two * ht, x)?) / (twelve * ht)
    } else {
        // One-sided fourth-order stencil at the start of the clock.
        (-T::lit(25.0) * g(t, x)? + T::lit(48.0) * g(t + ht, x)? - T::lit(36.0) * g(t + two * ht, x)?
            + T::lit(16.0) * g(t + T::lit(3.0) * ht, x)?
            - T::lit(3.0) * g(t + T::lit(4.0) * ht, x)?)
            / (twelve * ht)
    };
    let g_xx = (-g(t, x + two * hx)? + T::lit(16.0) * g(t, x + hx)? - T::lit(30.0) * g(t, x)?
        + T::lit(16.0) * g(t, x - hx)?
        - g(t, x - two * hx)?)
        / (twelve * hx * hx);
    let flux_x = (flux(x - two * hx)? - eight * flux(x - hx)? + eight * flux(x + hx)? - flux(x + two * hx)?)
        / (twelve * hx);
    let weight = (a * u_n(clock, 1, x, policy)?).exp();
    let lhs = weight * (g_t - half * g_xx - a * flux_x);
    let rhs = f_t - half * f_xx + v_1(clock, d, x, policy)? * f;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EllipticGeometry;
    use crate::quadrature::gauss_legendre;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn clock(r: f64, t_star: f64, t: f64) -> EllipticClock<f64> {
        EllipticGeometry::new(r, t_star).unwrap().clock(t).unwrap()
    }

    /// theta1(v; i s) by its plain nome series.
    fn theta1_series(v: f64, s: f64) -> f64 {
        let q = (-PI * s).exp();
        (0..60)
            .map(|n| {
                let k = n as f64 + 0.5;
                2.0 * (-1f64).powi(n) * q.powf(k * k) * ((2 * n + 1) as f64 * PI * v).sin()
            })
            .sum()
    }

    #[test]
    fn u_value_against_series() {
        let p = SeriesPolicy::default();
        let c = clock(1.0, 3.0, 1.0);
        let want = -theta1_series(0.5, 1.0 / PI).ln();
        assert!((u_n(&c, 1, PI, &p).unwrap() - want).abs() < 1e-13);
        assert!(u_n(&c, 2, 1e-6, &p).unwrap() > u_n(&c, 2, PI, &p).unwrap());
        assert!(u_n(&c, 2, 0.0, &p).is_err());
        assert!(u_n(&c, 2, 2.0 * PI, &p).is_err());
    }

    #[test]
    fn derivative_routes_agree() {
        let p = SeriesPolicy::default();
        for &(r, ts, t, n) in &[(1.0, 2.0, 0.5, 1usize), (0.7, 1.0, 0.9, 3), (2.0, 30.0, 1.0, 4)] {
            let c = clock(r, ts, t);
            let lattice = potential_lattice(&c, n, &p).unwrap();
            for k in 1..12 {
                let x = 2.0 * PI * r * k as f64 / 12.0;
                let a = u_n_dx(&c, n, x, &p).unwrap();
                let b = u_n_dx_weierstrass(&lattice, x).unwrap();
                let tr = u_n_dx_trigonometric(&c, n, x, &p).unwrap();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
                assert!((a - tr).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {tr}");
                let a2 = u_n_dxx(&c, n, x, &p).unwrap();
                let b2 = u_n_dxx_weierstrass(&lattice, x).unwrap();
                assert!((a2 - b2).abs() < 1e-9 * a2.abs().max(1.0), "{a2} vs {b2}");
                // Finite differences of U.
                let h = 1e-4 * r;
                let fd = (u_n(&c, n, x + h, &p).unwrap() - u_n(&c, n, x - h, &p).unwrap()) / (2.0 * h);
                assert!((fd - a).abs() < 1e-6 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn odd_even_symmetry_and_pole_behavior() {
        let p = SeriesPolicy::default();
        let c = clock(1.0, 2.0, 0.3);
        for &x in &[0.4, 1.7, 3.0] {
            let a = u_n_dx_extended(&c, 2, x, &p).unwrap();
            let b = u_n_dx_extended(&c, 2, -x, &p).unwrap();
            assert!((a + b).abs() < 1e-12);
            let a2 = u_n_dxx_extended(&c, 2, x, &p).unwrap();
            let b2 = u_n_dxx_extended(&c, 2, -x, &p).unwrap();
            assert!((a2 - b2).abs() < 1e-10 * a2.abs());
            let u = u_n(&c, 2, x, &p).unwrap();
            let v = u_n(&c, 2, 2.0 * PI - x, &p).unwrap();
            assert!((u - v).abs() < 1e-11);
        }
        let x = 1e-4;
        assert!((x * -u_n_dx(&c, 3, x, &p).unwrap() - 1.0).abs() < 1e-3);
        assert!(u_n_dx(&c, 1, PI, &p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn time_derivative_routes() {
        let p = SeriesPolicy::default();
        for n in 1..=5 {
            let c = clock(1.1, 2.0, 0.7);
            for &x in &[0.3, 2.0, 4.4, 6.5] {
                let exact = u_n_dt(&c, n, x, &p).unwrap();
                let fd = u_n_dt_finite_difference(&c, n, x, 1e-3, &p).unwrap();
                let pde = 0.5 * n as f64
                    * (u_n_dx(&c, n, x, &p).unwrap().powi(2) - u_n_dxx(&c, n, x, &p).unwrap());
                assert!((exact - pde).abs() < 1e-8 * exact.abs().max(1.0));
                assert!((fd - pde).abs() < 1e-8 * exact.abs().max(1.0), "n={n} x={x}: {fd} vs {pde}");
            }
        }
    }

    #[test]
    fn w_n_is_sum_of_pair_potentials() {
        let p = SeriesPolicy::default();
        let c = clock(1.0, 2.0, 0.4);
        let x = [1.0, 3.5];
        let xbar = x[0] + x[1] - PI;
        let want = u_n(&c, 2, 2.5, &p).unwrap() + u_n(&c, 2, xbar, &p).unwrap();
        assert!((w_n(&c, &x, &p).unwrap() - want).abs() < 1e-14);
        assert!(w_n(&c, &[2.0, 2.0 + 1e-6], &p).unwrap() > w_n(&c, &[2.0, 2.1], &p).unwrap());
        assert!(w_n(&c, &[3.0, 1.0], &p).is_err());
        // exp(-W) is the theta product: h_N up to the eta factor at beta = 2.
        let (log_h, sign) = log_h_n_r(&c, 2.0, &x, &p).unwrap();
        assert_eq!(sign, 1.0);
        assert!((log_h + w_n(&c, &x, &p).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn gradient_forms_agree_and_pair_terms_cancel() {
        let p = SeriesPolicy::default();
        let c = clock(1.3, 1.5, 0.6);
        let x = [0.5, 2.6, 4.4, 7.0];
        let a = grad_w_n(&c, &x, &p).unwrap();
        let b = grad_w_n_theta_form(&c, &x, &p).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10 * u.abs().max(1.0));
        }
        // Pair contributions sum to zero, leaving N U'(xbar).
        let center = u_n_dx_extended(&c, 4, c.geometry().circle().center_of_mass(&x), &p).unwrap();
        let total: f64 = a.iter().sum();
        assert!((total - 4.0 * center).abs() < 1e-12 * center.abs().max(1.0));
        // Gradient matches finite differences of W.
        let h = 1e-5;
        for j in 0..4 {
            let mut up = x;
            let mut down = x;
            up[j] += h;
            down[j] -= h;
            let fd = (w_n(&c, &up, &p).unwrap() - w_n(&c, &down, &p).unwrap()) / (2.0 * h);
            assert!((fd - a[j]).abs() < 1e-6 * a[j].abs().max(1.0));
        }
    }

    #[test]
    fn potentials_vanish_at_special_parameters() {
        let p = SeriesPolicy::default();
        let c = clock(1.0, 2.0, 0.5);
        for &x in &[0.1, 2.0, 5.0] {
            assert_eq!(v_1(&c, 3.0, x, &p).unwrap(), 0.0);
            assert!(v_1(&c, 1.0, x, &p).is_err());
            let a = v_1(&c, 1.5, x, &p).unwrap();
            let b = v_1_weierstrass(&c, 1.5, x, &p).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
        let x = [0.5, 2.0, 4.1];
        assert!(v_n(&c, 2.0, &x, &p).unwrap().abs() < 1e-10);
        assert!(v_n_weierstrass(&c, 2.0, &x, &p).unwrap().abs() < 1e-10);
        let a = v_n(&c, 1.0, &x, &p).unwrap();
        let b = v_n_weierstrass(&c, 1.0, &x, &p).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn ground_energy_integrates_to_log_c() {
        let p = SeriesPolicy::default();
        let g = EllipticGeometry::new(0.9f64, 1.6).unwrap();
        assert_eq!(ground_energy(&g.clock(0.3).unwrap(), 2, 2.0, &p).unwrap(), 0.0);
        assert_eq!(ground_energy(&g.clock(0.3).unwrap(), 1, 2.0, &p).unwrap(), 0.0);
        assert_eq!(c_factor(&g.clock(0.3).unwrap(), 2, 2.0, &p).unwrap(), 1.0);
        assert!((c_factor(&g.clock(0.0).unwrap(), 4, 2.0, &p).unwrap() - 1.0).abs() < 1e-15);
        for &(n, beta) in &[(3usize, 2.0f64), (4, 1.0), (5, 3.0)] {
            let t = 1.2f64;
            let rule = gauss_legendre(40, 0.0, t).unwrap();
            let integral = rule.integrate(|s| ground_energy(&g.clock(s).unwrap(), n, beta, &p).unwrap());
            let log_c = c_factor(&g.clock(t).unwrap(), n, beta, &p).unwrap().ln();
            assert!((integral - log_c).abs() < 1e-8, "N={n}: {integral} vs {log_c}");
            let log_c = |s: f64| c_factor(&g.clock(s).unwrap(), n, beta, &p).unwrap().ln();
            let h = 1e-3;
            let fd = (log_c(t - 2.0 * h) - 8.0 * log_c(t - h) + 8.0 * log_c(t + h) - log_c(t + 2.0 * h)) / (12.0 * h);
            let e = ground_energy(&g.clock(t).unwrap(), n, beta, &p).unwrap();
            assert!((fd - e).abs() < 1e-7 * e.abs().max(1.0), "N={n}: {fd} vs {e}");
        }
    }

    #[test]
    fn h_product_equals_determinant() {
        let p = SeriesPolicy::default();
        let c = clock(1.2, 2.0, 0.8);
        let circle = *c.geometry().circle();
        for n in 2..=5 {
            let v = circle.pinning_points(n);
            let x: Vec<f64> = v.iter().enumerate().map(|(j, &vj)| vj + 0.13 * ((j * 7) % 3) as f64 - 0.1).collect();
            circle.check_alcove(&x).unwrap();
            for &beta in &[1.0, 2.0, 3.0] {
                let a = h_n_r_product(&c, beta, &x, &p).unwrap();
                let b = h_n_r_det(&c, beta, &x, &p).unwrap();
                assert!((a - b).abs() < 1e-9 * a.abs(), "N={n} beta={beta}: {a} vs {b}");
            }
        }
        let x = [1.0, 1.0];
        assert_eq!(h_n_r_product(&c, 2.0, &x, &p).unwrap(), 0.0);
        let a = h_n_r_det(&c, 2.0, &[1.0, 3.0], &p).unwrap();
        let b = h_n_r_det(&c, 2.0, &[3.0, 1.0], &p).unwrap();
        assert!((a + b).abs() < 1e-13 * a.abs());
    }

    #[test]
    fn operator_identity_holds_weakly() {
        let p = SeriesPolicy::default();
        for &(d, t) in &[(1.5, 0.0), (3.0, 0.4), (4.5, 0.9)] {
            let c = clock(1.0, 2.0, t);
            for &x in &[1.5, 2.6, 3.3, 4.0] {
                let res = v_1_operator_residual(&c, d, x, &p).unwrap();
                assert!(res < 1e-5, "D={d} t={t} x={x}: {res}");
            }
        }
    }

    #[test]
    fn single_precision_potential() {
        let p = SeriesPolicy::<f32>::default();
        let c = EllipticGeometry::new(1.0f32, 2.0).unwrap().clock(0.5).unwrap();
        let a = u_n_dx(&c, 2, 1.0f32, &p).unwrap();
        let b = u_n_dx(&clock(1.0, 2.0, 0.5), 2, 1.0, &SeriesPolicy::default()).unwrap();
        assert!((a as f64 - b).abs() < 1e-5 * b.abs());
    }

    proptest! {
        #[test]
        fn v_n_is_permutation_invariant(a in 0.1f64..1.5, b in 1.6f64..3.0, c3 in 3.1f64..4.5, t in 0.0f64..1.5) {
            let p = SeriesPolicy::default();
            let c = clock(1.0, 2.0, t);
            let x = [a, b, c3];
            prop_assume!(c.geometry().circle().check_alcove(&x).is_ok());
            let v = v_n_extended(&c, 1.0, &x, &p).unwrap();
            let w = v_n_extended(&c, 1.0, &[b, c3, a + 2.0 * PI], &p).unwrap();
            prop_assert!((v - w).abs() < 1e-12 * v.abs().max(1.0));
            let z = v_n_extended(&c, 1.0, &[c3, a, b], &p).unwrap();
            prop_assert!((v - z).abs() < 1e-12 * v.abs().max(1.0));
        }
    }
}
