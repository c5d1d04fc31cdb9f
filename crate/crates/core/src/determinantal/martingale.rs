//! Entire functions `Phi_xi^{u_k}`, the martingale functions obtained by
//! averaging them along an imaginary Brownian motion, and determinantal
//! martingales.
//!
//! `Phi_k(z) = theta1((ubar + z - u_k)/2 pi r) / theta1(ubar/2 pi r) *
//! prod_{l != k} theta1((z - u_l)/2 pi r) / theta1((u_k - u_l)/2 pi r)`
//! with modular parameter `N tau(0)`. After the imaginary transformation
//! every theta carries the Gaussian factor `exp(-w^2 / 2 N t_star)`, and the
//! product collapses to `exp(-z^2/2t_star + kappa_N z / N t_star)` times
//! bounded thetas at `2 pi i r^2 / N t_star`. The `exp(b^2 / 2 t_star)` growth
//! along `z = x + i b` is absorbed into the Gaussian weight: with
//! `sigma^2 = t t_star / (t_star - t)`,
//! `E_{b ~ N(0,t)}[Phi(x + i b)] = sqrt(sigma^2 / t) E_{b ~ N(0,sigma^2)}[exp(-b^2/2t_star) Phi(x + i b)]`.

use num_complex::Complex;

use super::config::{PointConfiguration, QuadratureSettings};
use crate::error::{invalid, Error, Result};
use crate::heat_kernels::q_r_n;
use crate::linalg::determinant;
use crate::potentials::log_h_n_r;
use crate::quadrature::normal_expectation_rule;
use crate::scalar::{creal, Real, C};

/// Per-index constants of the transformed product: the theta denominators
/// and `exp(-(C_k - D_k) / 2 N t_star)`.
struct TransformedFactors<T> {
    scale: Vec<C<T>>,
}

impl<T: Real> TransformedFactors<T> {
    fn new(xi: &PointConfiguration<T>) -> Result<Self> {
        let u = xi.points();
        let n = u.len();
        let ubar = xi.ubar();
        let nt = T::count(n) * xi.t_star();
        let center_den = xi.theta_dual(creal(ubar))?;
        let mut scale = Vec::with_capacity(n);
        for k in 0..n {
            let mut c = (ubar - u[k]) * (ubar - u[k]);
            let mut d = ubar * ubar;
            let mut den = center_den;
            for l in (0..n).filter(|&l| l != k) {
                c = c + u[l] * u[l];
                d = d + (u[k] - u[l]) * (u[k] - u[l]);
                den = den * xi.theta_dual(creal(u[k] - u[l]))?;
            }
            scale.push(creal((-(c - d) / (T::lit(2.0) * nt)).exp()) / den);
        }
        Ok(Self { scale })
    }
}

/// `exp(-b^2/2t_star) Phi_k(x + i b)` for every `k`, written into `out`.
fn damped_phi_row<T: Real>(
    xi: &PointConfiguration<T>,
    factors: &TransformedFactors<T>,
    z: C<T>,
    out: &mut [C<T>],
) -> Result<()> {
    let u = xi.points();
    let n = u.len();
    let t_star = xi.t_star();
    let nt = T::count(n) * t_star;
    let kappa = xi.circle().kappa(n);
    let two = T::lit(2.0);
    // -z^2/2t_star without its +b^2/2t_star part.
    let gauss = Complex::new(-(z.re * z.re) / (two * t_star), -(z.re * z.im) / t_star) + z * (kappa / nt);
    let common = gauss.exp();
    let mut pair = Vec::with_capacity(n);
    for &ul in u {
        pair.push(xi.theta_dual(z - creal(ul))?);
    }
    // prefix[k] = prod_{l < k} pair[l], suffix[k] = prod_{l > k} pair[l].
    let mut prefix = vec![C::new(T::one(), T::zero()); n];
    for k in 1..n {
        prefix[k] = prefix[k - 1] * pair[k - 1];
    }
    let mut suffix = C::new(T::one(), T::zero());
    for k in (0..n).rev() {
        let center = xi.theta_dual(z + creal(xi.ubar() - u[k]))?;
        out[k] = common * center * prefix[k] * suffix * factors.scale[k];
        suffix = suffix * pair[k];
    }
    Ok(())
}

/// `Phi_xi^{u_k}(z)` from the theta product with modular parameter `N tau(0)`.
pub fn phi_entire<T: Real>(xi: &PointConfiguration<T>, k: usize, z: C<T>) -> Result<C<T>> {
    let u = xi.points();
    check_index(xi, k)?;
    let ubar = xi.ubar();
    let mut value = xi.theta_n(z + creal(ubar - u[k]))? / xi.theta_n(creal(ubar))?;
    for l in (0..u.len()).filter(|&l| l != k) {
        value = value * xi.theta_n(z - creal(u[l]))? / xi.theta_n(creal(u[k] - u[l]))?;
    }
    Ok(value)
}

/// `Phi_xi^{u_k}(z)` through the imaginary-transformed thetas.
pub fn phi_entire_transformed<T: Real>(xi: &PointConfiguration<T>, k: usize, z: C<T>) -> Result<C<T>> {
    check_index(xi, k)?;
    let factors = TransformedFactors::new(xi)?;
    let mut row = vec![C::new(T::zero(), T::zero()); xi.n()];
    damped_phi_row(xi, &factors, z, &mut row)?;
    Ok(row[k] * (z.im * z.im / (T::lit(2.0) * xi.t_star())).exp())
}

fn check_index<T: Real>(xi: &PointConfiguration<T>, k: usize) -> Result<()> {
    if k < xi.n() {
        Ok(())
    } else {
        Err(invalid("k", format!("index {k} out of range for {} points", xi.n())))
    }
}

fn real_part<T: Real>(value: C<T>, scale: T, tol: T) -> Result<T> {
    if value.im.abs() <= tol * scale.max(value.re.abs()) {
        Ok(value.re)
    } else {
        Err(Error::NotReal {
            imag: value.im.as_f64(),
            scale: scale.as_f64(),
        })
    }
}

/// `E_{b ~ N(0, t)}[F(x + i b)]` for a vector-valued `F` supplied in damped
/// form `exp(-b^2/2t_star) F(x + i b)` by `damped`.
///
/// The Gauss-Hermite rule is doubled from `settings.initial_nodes` until
/// successive values agree to `settings.rel_tol` relative to the integral of
/// `|integrand|`; the results must be real to `settings.imag_tol`.
pub(crate) fn imaginary_average<T: Real>(
    settings: &QuadratureSettings<T>,
    t: T,
    t_star: T,
    x: T,
    width: usize,
    mut damped: impl FnMut(C<T>, &mut [C<T>]) -> Result<()>,
) -> Result<Vec<T>> {
    let mut row = vec![C::new(T::zero(), T::zero()); width];
    if t == T::zero() {
        damped(creal(x), &mut row)?;
        return row
            .iter()
            .map(|&v| real_part(v, v.norm(), settings.imag_tol))
            .collect();
    }
    let variance = t * t_star / (t_star - t);
    let prefactor = (variance / t).sqrt();
    let mut previous: Option<Vec<C<T>>> = None;
    let mut nodes = settings.initial_nodes;
    let mut change = T::infinity();
    loop {
        let rule = normal_expectation_rule::<T>(nodes, variance)?;
        let mut sums = vec![C::new(T::zero(), T::zero()); width];
        let mut scales = vec![T::zero(); width];
        for (&b, &w) in rule.nodes.iter().zip(&rule.weights) {
            damped(Complex::new(x, b), &mut row)?;
            for k in 0..width {
                sums[k] = sums[k] + row[k] * w;
                scales[k] = scales[k] + row[k].norm() * w;
            }
        }
        for k in 0..width {
            sums[k] = sums[k] * prefactor;
            scales[k] = scales[k] * prefactor;
        }
        if sums.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "imaginary Brownian average",
            });
        }
        let scale = scales.iter().copied().fold(T::min_positive_value(), T::max);
        if let Some(prev) = &previous {
            change = sums
                .iter()
                .zip(prev)
                .map(|(a, b)| (*a - *b).norm())
                .fold(T::zero(), T::max)
                / scale;
            if change <= settings.rel_tol {
                return sums
                    .iter()
                    .zip(&scales)
                    .map(|(&s, &sc)| real_part(s, sc, settings.imag_tol))
                    .collect();
            }
        }
        if nodes * 2 > settings.max_nodes {
            return Err(Error::QuadratureNotConverged { change: change.as_f64() });
        }
        previous = Some(sums);
        nodes *= 2;
    }
}

/// All martingale functions `M_xi^{u_k}(t, x)`, `k = 0..N`, by
/// [`imaginary_average`] with the settings of `xi`.
pub fn mart_vector<T: Real>(xi: &PointConfiguration<T>, t: T, x: T) -> Result<Vec<T>> {
    xi.check_time(t)?;
    let factors = TransformedFactors::new(xi)?;
    imaginary_average(&xi.quadrature, t, xi.t_star(), x, xi.n(), |z, row| {
        damped_phi_row(xi, &factors, z, row)
    })
}

/// Martingale function `M_xi^{u_k}(t, x) = E[Phi_xi^{u_k}(x + i b(t))]`.
pub fn mart_fn<T: Real>(xi: &PointConfiguration<T>, k: usize, t: T, x: T) -> Result<T> {
    check_index(xi, k)?;
    Ok(mart_vector(xi, t, x)?[k])
}

/// `M_xi^{u_k}(t, x)` from the lattice expansion of the transformed theta
/// product, each exponential averaged in closed form:
/// `E[exp(-(x + i b - m)^2 / 2t_star)] = sqrt(t_star / (t_star - t)) exp(-(x - m)^2 / 2(t_star - t))`.
/// Every summation index runs over `|n| <= n_max`.
pub fn mart_fn_series<T: Real>(xi: &PointConfiguration<T>, k: usize, t: T, x: T, n_max: i64) -> Result<T> {
    check_index(xi, k)?;
    xi.check_time(t)?;
    let u = xi.points();
    let n = u.len();
    let ubar = xi.ubar();
    let t_star = xi.t_star();
    let r = xi.circle().r();
    let nt = T::count(n) * t_star;
    let two = T::lit(2.0);
    let log_nome = -T::PI() * xi.tau_dual().im();
    let shifts: Vec<T> = std::iter::once(u[k] - ubar)
        .chain((0..n).filter(|&l| l != k).map(|l| u[l]))
        .collect();
    let factors = TransformedFactors::new(xi)?;
    // i^N from the theta coefficients, combined with the complex constant.
    let mut constant = factors.scale[k];
    for _ in 0..n {
        constant = constant * C::new(T::zero(), T::one());
    }
    let kappa = xi.circle().kappa(n);
    let remaining = t_star - t;
    let norm = (t_star / remaining).sqrt();
    let width = (2 * n_max + 1) as usize;
    let total_terms = width.checked_pow(n as u32).ok_or(Error::ComplexityCap {
        reason: "series lattice too large".into(),
    })?;
    let mut sum = T::zero();
    let mut index = vec![-n_max; n];
    for _ in 0..total_terms {
        let mut log_term = T::zero();
        let mut odd_sum = T::zero();
        let mut parity = 0i64;
        for (&m, &a) in index.iter().zip(&shifts) {
            let half = T::lit(m as f64 - 0.5);
            let odd = T::lit((2 * m - 1) as f64);
            log_term = log_term + half * half * log_nome - odd * T::PI() * r * a / nt;
            odd_sum = odd_sum + odd;
            parity += m;
        }
        let mean = (kappa + T::PI() * r * odd_sum) / T::count(n);
        log_term = log_term + mean * mean / (two * t_star) - (x - mean) * (x - mean) / (two * remaining);
        let sign = if parity.rem_euclid(2) == 0 { T::one() } else { -T::one() };
        sum = sum + sign * log_term.exp();
        for slot in index.iter_mut() {
            *slot += 1;
            if *slot <= n_max {
                break;
            }
            *slot = -n_max;
        }
    }
    let value = constant * (sum * norm);
    real_part(value, value.norm(), xi.quadrature.imag_tol)
}

/// Determinantal martingale `det[M_xi^{u_k}(t, x_j)]`.
pub fn det_martingale<T: Real>(xi: &PointConfiguration<T>, t: T, x: &[T]) -> Result<T> {
    if x.len() != xi.n() {
        return Err(invalid("x", format!("expected {} coordinates, got {}", xi.n(), x.len())));
    }
    let n = x.len();
    let mut entries = Vec::with_capacity(n * n);
    for &xj in x {
        entries.extend(mart_vector(xi, t, xj)?);
    }
    Ok(determinant(n, entries))
}

/// Three expressions of the same time-dependent weight at `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdrCheck<T> {
    /// `q_N(t_star - t, v | x) / q_N(t_star, v | u)` with the pinning configuration `v`.
    pub kernel_ratio: T,
    /// `det[M_xi^{u_k}(t, x_j)]`.
    pub determinantal: T,
    /// Ratio of the theta-product forms of `h_N` at `beta = 2`.
    pub theta_product: T,
}

impl<T: Real> MdrCheck<T> {
    /// Largest deviation from the kernel ratio.
    pub fn residual(&self) -> T {
        (self.kernel_ratio - self.determinantal)
            .abs()
            .max((self.kernel_ratio - self.theta_product).abs())
    }
}

/// Evaluates the kernel ratio, the determinantal martingale and the theta
/// product at `(t, x)` for `x` in the restricted alcove.
pub fn mdr_ratio_check<T: Real>(xi: &PointConfiguration<T>, t: T, x: &[T]) -> Result<MdrCheck<T>> {
    let circle = xi.circle();
    circle.check_alcove(x)?;
    if x.len() != xi.n() {
        return Err(invalid("x", "length differs from the configuration"));
    }
    let geom = xi.geometry();
    let clock = geom.clock(t)?;
    let v = circle.pinning_points(xi.n());
    let kernel_ratio = q_r_n(clock.remaining(), &v, x, circle, &xi.policy)?
        / q_r_n(xi.t_star(), &v, xi.points(), circle, &xi.policy)?;
    let (log_t, sign_t) = log_h_n_r(&clock, T::lit(2.0), x, &xi.policy)?;
    let (log_0, sign_0) = log_h_n_r(&geom.clock(T::zero())?, T::lit(2.0), xi.points(), &xi.policy)?;
    Ok(MdrCheck {
        kernel_ratio,
        determinantal: det_martingale(xi, t, x)?,
        theta_product: sign_t * sign_0 * (log_t - log_0).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(points: &[f64]) -> PointConfiguration<f64> {
        PointConfiguration::new(points.to_vec(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for points in [vec![1.0, 3.2], vec![0.5, 2.0, 4.4], vec![0.3, 1.5, 3.0, 5.0]] {
            let xi = config(&points);
            for _ in 0..10 {
                let z = C::new(rng.random_range(-2.0..8.0), rng.random_range(-2.0..2.0));
                for k in 0..xi.n() {
                    let a = phi_entire(&xi, k, z).unwrap();
                    let b = phi_entire_transformed(&xi, k, z).unwrap();
                    assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0), "{points:?} {z} {k}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn biorthogonal_at_the_start() {
        for points in [vec![1.0, 3.2], vec![0.5, 2.0, 4.4], vec![0.3, 1.5, 3.0, 5.0], vec![0.2, 1.0, 2.2, 3.5, 4.9]] {
            let xi = config(&points);
            for (j, &uj) in points.iter().enumerate() {
                let row = mart_vector(&xi, 0.0, uj).unwrap();
                for (k, v) in row.iter().enumerate() {
                    let expected = if j == k { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-10, "{points:?} j={j} k={k}: {v}");
                    let phi = phi_entire(&xi, k, C::new(uj, 0.0)).unwrap();
                    assert!((phi.re - expected).abs() < 1e-10 && phi.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn quasi_periodic_in_x() {
        for points in [vec![1.0, 3.2], vec![0.5, 2.0, 4.4]] {
            let xi = config(&points);
            let sign = xi.parity().sign::<f64>();
            for x in [0.4, 2.9] {
                let a = mart_vector(&xi, 0.4, x).unwrap();
                let b = mart_vector(&xi, 0.4, x + std::f64::consts::TAU).unwrap();
                for (va, vb) in a.iter().zip(&b) {
                    assert!((vb - sign * va).abs() < 1e-9 * (1.0 + va.abs()), "{va} {vb}");
                }
            }
        }
    }

    #[test]
    fn series_matches_quadrature() {
        for points in [vec![1.0, 3.2], vec![0.5, 2.0, 4.4]] {
            let xi = config(&points);
            for (t, x) in [(0.0, 2.0), (0.3, 0.7), (0.7, 4.0), (0.9, 5.5)] {
                for k in 0..xi.n() {
                    let q = mart_fn(&xi, k, t, x).unwrap();
                    let s = mart_fn_series(&xi, k, t, x, 6).unwrap();
                    assert!((q - s).abs() <= 1e-8 * q.abs().max(1.0), "t={t} x={x} k={k}: {q} {s}");
                }
            }
        }
    }

    #[test]
    fn determinantal_martingale_basics() {
        let xi = config(&[0.5, 2.0, 4.4]);
        assert!((det_martingale(&xi, 0.0, &[0.5, 2.0, 4.4]).unwrap() - 1.0).abs() < 1e-10);
        let a = det_martingale(&xi, 0.3, &[0.7, 2.1, 3.9]).unwrap();
        let b = det_martingale(&xi, 0.3, &[2.1, 0.7, 3.9]).unwrap();
        assert!((a + b).abs() < 1e-12 * a.abs().max(1.0));
        assert!(det_martingale(&xi, 0.3, &[0.7, 2.1]).is_err());
        assert!(matches!(mart_fn(&xi, 0, 1.0, 1.0), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn mdr_expressions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xi = config(&[1.0, 3.2]);
        for _ in 0..8 {
            let t = rng.random_range(0.05..0.9);
            let x1 = rng.random_range(0.2..3.0);
            let x2 = x1 + rng.random_range(0.5..3.0);
            if xi.circle().check_alcove(&[x1, x2]).is_err() {
                continue;
            }
            let c = mdr_ratio_check(&xi, t, &[x1, x2]).unwrap();
            assert!(c.residual() < 1e-7 * c.kernel_ratio.abs().max(1.0), "{c:?}");
        }
        let at_start = mdr_ratio_check(&xi, 0.0, &[1.0, 3.2]).unwrap();
        assert!((at_start.kernel_ratio - 1.0).abs() < 1e-12 && at_start.residual() < 1e-10);
    }
}
