//! Correlation kernel for initial configurations that may carry multiple
//! points. The entire function attached to a support point `u` is the
//! contour integral around `u` of
//! `p(s, x | zeta) theta1'(0) / (2 pi r theta1((z - zeta)/2 pi r)) *
//! theta1((ubar + z - u)/2 pi r) / theta1(ubar/2 pi r) *
//! prod_l theta1((z - u_l)/2 pi r) / theta1((zeta - u_l)/2 pi r)`
//! (modular parameter `N tau(0)`), and the kernel is
//! `sum_{u in supp} M^u((s, x) | (t, y)) - 1(s > t) p(s - t, x | y)`.
//!
//! Every theta is evaluated in imaginary-transformed form; the Gaussian
//! factors are collected into one exponent so the `exp(b^2/2t_star)` growth
//! along `z = y + i b` cancels against the damping of the Gaussian average.

use num_complex::Complex;

use super::config::{min_gap, PointConfiguration, QuadratureSettings, SpaceTimePoint};
use super::martingale::imaginary_average;
use crate::error::{invalid, Error, Result};
use crate::geometry::{EllipticGeometry, Parity};
use crate::heat_kernels::{p_wrapped, p_wrapped_complex};
use crate::scalar::{cimag, creal, Real, C};
use crate::special_functions::{theta, theta_jet, ModularParam, SeriesPolicy, ThetaKind};

/// Number of trapezoid nodes on the contour and its radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSettings<T> {
    pub nodes: usize,
    /// Defaults to `min(gap / 4, pi r / 4N, N t_star / 4r)`, where `gap` is
    /// the smallest distance between distinct support points.
    pub radius: Option<T>,
}

impl<T> Default for ContourSettings<T> {
    fn default() -> Self {
        Self { nodes: 256, radius: None }
    }
}

/// `N >= 2` points in `[0, 2 pi r)`, sorted, possibly repeated, with shifted
/// center of mass in `(0, 2 pi r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralConfiguration<T> {
    points: Vec<T>,
    support: Vec<T>,
    geometry: EllipticGeometry<T>,
    ubar: T,
    pub policy: SeriesPolicy<T>,
    pub quadrature: QuadratureSettings<T>,
    pub contour: ContourSettings<T>,
}

impl<T: Real> GeneralConfiguration<T> {
    pub fn new(points: Vec<T>, r: T, t_star: T) -> Result<Self> {
        let geometry = EllipticGeometry::new(r, t_star)?;
        let circle = geometry.circle();
        let period = circle.period();
        if points.len() < 2 {
            return Err(invalid("points", "at least two points are required"));
        }
        if let Some(&x) = points.iter().find(|&&x| !(x >= T::zero() && x < period)) {
            return Err(invalid("points", format!("{x} outside [0, 2 pi r)")));
        }
        if points.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("points", "points must be sorted ascending"));
        }
        let mut support = points.clone();
        support.dedup();
        if support.len() > 1 {
            let gap = min_gap(circle, &support);
            if !(gap > T::lit(PointConfiguration::<T>::SEPARATION) * period) {
                return Err(Error::SeparationTooSmall { gap: gap.as_f64() });
            }
        }
        let ubar = circle.center_of_mass(&points);
        if !(ubar > T::zero() && ubar < period) {
            return Err(Error::OutsideAlcove {
                reason: format!("center of mass {ubar} outside (0, 2 pi r)"),
            });
        }
        Ok(Self {
            points,
            support,
            geometry,
            ubar,
            policy: SeriesPolicy::default(),
            quadrature: QuadratureSettings::default(),
            contour: ContourSettings::default(),
        })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Distinct points, ascending.
    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn multiplicity(&self, u: T) -> usize {
        self.points.iter().filter(|&&p| p == u).count()
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn t_star(&self) -> T {
        self.geometry.t_star()
    }

    fn parity(&self) -> Parity {
        Parity::of_count(self.n())
    }

    fn nt(&self) -> T {
        T::count(self.n()) * self.t_star()
    }

    fn tau_dual(&self) -> ModularParam<T> {
        let r = self.geometry.r();
        ModularParam::imaginary(T::TAU() * r * r / self.nt()).expect("positive horizon")
    }

    /// `theta1(-i r w / N t_star; 2 pi i r^2 / N t_star)`.
    fn theta_dual(&self, w: C<T>) -> Result<C<T>> {
        let scale = self.geometry.r() / self.nt();
        theta(ThetaKind::One, w * cimag(-scale), self.tau_dual(), &self.policy)
    }

    /// Imaginary period `N t_star / r` of the pole lattice.
    fn imaginary_period(&self) -> T {
        self.nt() / self.geometry.r()
    }

    /// Contour radius after validation against the support gaps.
    fn base_radius(&self) -> Result<T> {
        let circle = self.geometry.circle();
        let gap = if self.support.len() > 1 {
            min_gap(circle, &self.support)
        } else {
            circle.period()
        };
        let limit = gap.min(self.imaginary_period());
        let radius = self.contour.radius.unwrap_or_else(|| {
            (limit / T::lit(4.0)).min(T::PI() * circle.r() / (T::lit(4.0) * T::count(self.n())))
        });
        if !(radius > T::zero()) || radius >= limit / T::lit(2.0) {
            return Err(Error::ContourTooLarge { radius: radius.as_f64() });
        }
        Ok(radius)
    }
}

impl<T: Real> From<&PointConfiguration<T>> for GeneralConfiguration<T> {
    fn from(xi: &PointConfiguration<T>) -> Self {
        let mut general = Self::new(xi.points().to_vec(), xi.circle().r(), xi.t_star())
            .expect("a valid point configuration is a valid general configuration");
        general.policy = xi.policy;
        general.quadrature = xi.quadrature;
        general
    }
}

/// Contour nodes around one support point with their `z`-independent weights
/// `(zeta - u)/n * p(s, x | zeta) * d/dw theta_dual(0) / prod_l theta_dual(zeta - u_l)`.
struct Contour<T> {
    radius: T,
    nodes: Vec<C<T>>,
    weights: Vec<C<T>>,
    /// `sum_l (zeta - u_l)^2` at each node.
    squares: Vec<C<T>>,
}

impl<T: Real> Contour<T> {
    fn new(xi: &GeneralConfiguration<T>, u: T, radius: T, source: SpaceTimePoint<T>) -> Result<Self> {
        let n = xi.contour.nodes;
        let circle = xi.geometry.circle();
        let slope = xi.geometry.r() / xi.nt();
        let derivative = theta_jet(ThetaKind::One, creal(T::zero()), xi.tau_dual(), &xi.policy)?.d1 * cimag(-slope);
        let mut contour = Self {
            radius,
            nodes: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            squares: Vec::with_capacity(n),
        };
        for j in 0..n {
            let angle = T::TAU() * T::count(j) / T::count(n);
            let offset = Complex::from_polar(radius, angle);
            let zeta = creal(u) + offset;
            let heat = p_wrapped_complex(xi.parity(), source.t, creal(source.x), zeta, circle, &xi.policy)?;
            let mut den = C::new(T::one(), T::zero());
            let mut squares = C::new(T::zero(), T::zero());
            for &ul in &xi.points {
                let w = zeta - creal(ul);
                den = den * xi.theta_dual(w)?;
                squares = squares + w * w;
            }
            contour.nodes.push(zeta);
            contour.weights.push(offset / T::count(n) * heat * derivative / den);
            contour.squares.push(squares);
        }
        Ok(contour)
    }
}

/// `exp(-b^2/2t_star) * p(s, x | u) * Phi^u((s, x); z)` by the contour rule.
fn damped_contour_value<T: Real>(xi: &GeneralConfiguration<T>, u: T, contour: &Contour<T>, z: C<T>) -> Result<C<T>> {
    let two_nt = T::lit(2.0) * xi.nt();
    let ubar = xi.ubar;
    let center = creal(ubar - u) + z;
    let mut prefactor = xi.theta_dual(center)? / xi.theta_dual(creal(ubar))?;
    let mut fixed = center * center - creal(ubar * ubar);
    for &ul in &xi.points {
        let w = z - creal(ul);
        prefactor = prefactor * xi.theta_dual(w)?;
        fixed = fixed + w * w;
    }
    let damping = creal(z.im * z.im / (T::lit(2.0) * xi.t_star()));
    let mut sum = C::new(T::zero(), T::zero());
    for ((&zeta, &weight), &squares) in contour.nodes.iter().zip(&contour.weights).zip(&contour.squares) {
        let gap = z - zeta;
        let exponent = -(fixed - squares - gap * gap) / two_nt - damping;
        sum = sum + weight * exponent.exp() / xi.theta_dual(gap)?;
    }
    Ok(prefactor * sum)
}

/// Distance from `u` to the nearest pole `z - 2 pi r m - i n N t_star / r` of the contour integrand.
fn moving_pole_distance<T: Real>(xi: &GeneralConfiguration<T>, u: T, z: C<T>) -> T {
    let period = xi.geometry.circle().period();
    let im_period = xi.imaginary_period();
    let reduce = |v: T, p: T| v - (v / p).round() * p;
    let d = z - creal(u);
    Complex::new(reduce(d.re, period), reduce(d.im, im_period)).norm()
}

/// Kernel value at `p1 = (s, x)`, `s > 0`, and `p2 = (t, y)`.
pub fn conjecture_kernel<T: Real>(
    xi: &GeneralConfiguration<T>,
    p1: SpaceTimePoint<T>,
    p2: SpaceTimePoint<T>,
) -> Result<T> {
    let t_star = xi.t_star();
    for (name, time) in [("s", p1.t), ("t", p2.t)] {
        if !(time >= T::zero() && time < t_star) {
            return Err(Error::TimeOutOfRange {
                t: time.as_f64(),
                limit: t_star.as_f64(),
            });
        }
        if name == "s" && time == T::zero() {
            return Err(invalid("s", "the kernel needs a positive first time"));
        }
    }
    let radius = xi.base_radius()?;
    let mut total = T::zero();
    for &u in &xi.support {
        let base = Contour::new(xi, u, radius, p1)?;
        let value = imaginary_average(&xi.quadrature, p2.t, t_star, p2.x, 1, |z, row| {
            let distance = moving_pole_distance(xi, u, z);
            row[0] = if distance >= T::lit(2.0) * base.radius {
                damped_contour_value(xi, u, &base, z)?
            } else if distance > T::lit(1e-12) * base.radius {
                let near = Contour::new(xi, u, distance / T::lit(2.0), p1)?;
                damped_contour_value(xi, u, &near, z)?
            } else {
                return Err(Error::PoleProximity {
                    distance: distance.as_f64(),
                });
            };
            Ok(())
        })?;
        total = total + value[0];
    }
    if p1.t > p2.t {
        total = total - p_wrapped(xi.parity(), p1.t - p2.t, p1.x, p2.x, xi.geometry.circle(), &xi.policy)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::determinantal::correlation_kernel;
    use crate::quadrature::periodic_trapezoid;

    fn pair() -> (PointConfiguration<f64>, GeneralConfiguration<f64>) {
        let xi = PointConfiguration::new(vec![1.0, 3.2], 1.0, 1.0).unwrap();
        let general = GeneralConfiguration::from(&xi);
        (xi, general)
    }

    #[test]
    fn reduces_to_the_kernel_without_multiple_points() {
        let (xi, general) = pair();
        let cases = [((0.3, 2.0), (0.3, 4.5)), ((0.5, 1.1), (0.2, 1.3)), ((0.2, 5.0), (0.7, 0.4)), ((0.4, 3.2), (0.4, 1.0))];
        for ((s, x), (t, y)) in cases {
            let p1 = SpaceTimePoint::new(s, x);
            let p2 = SpaceTimePoint::new(t, y);
            let a = correlation_kernel(&xi, p1, p2).unwrap();
            let b = conjecture_kernel(&general, p1, p2).unwrap();
            assert!((a - b).abs() <= 1e-7 * a.abs().max(1e-3), "{p1:?} {p2:?}: {a} {b}");
        }
    }

    #[test]
    fn stable_under_radius_halving() {
        let (_, mut general) = pair();
        let p1 = SpaceTimePoint::new(0.3, 2.0);
        let p2 = SpaceTimePoint::new(0.5, 4.0);
        let radius = general.base_radius().unwrap();
        let a = conjecture_kernel(&general, p1, p2).unwrap();
        general.contour.radius = Some(radius / 2.0);
        let b = conjecture_kernel(&general, p1, p2).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
        general.contour.radius = Some(1.2);
        assert!(matches!(
            conjecture_kernel(&general, p1, p2),
            Err(Error::ContourTooLarge { .. })
        ));
    }

    #[test]
    fn diagonal_integrates_to_the_particle_number() {
        let (_, general) = pair();
        let t = 0.4;
        let trace = periodic_trapezoid(0.0, std::f64::consts::TAU, 64, |x| {
            let p = SpaceTimePoint::new(t, x);
            conjecture_kernel(&general, p, p).unwrap()
        });
        assert!((trace - 2.0).abs() < 1e-6, "{trace}");
    }

    #[test]
    fn accepts_multiple_points() {
        let general = GeneralConfiguration::new(vec![1.0f64, 1.0, 4.0], 1.0, 1.0).unwrap();
        assert_eq!(general.support(), &[1.0, 4.0]);
        assert_eq!(general.multiplicity(1.0), 2);
        let p = SpaceTimePoint::new(0.3, 2.0);
        assert!(conjecture_kernel(&general, p, p).unwrap().is_finite());
        assert!(PointConfiguration::new(vec![1.0, 1.0, 4.0], 1.0, 1.0).is_err());
    }
}
