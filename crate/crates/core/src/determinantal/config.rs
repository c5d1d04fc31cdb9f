//! Initial configurations, space-time points and quadrature settings.

use crate::error::{invalid, Error, Result};
use crate::geometry::{CircleGeom, EllipticGeometry, Parity};
use crate::scalar::{cimag, creal, Real, C};
use crate::special_functions::{theta, ModularParam, SeriesPolicy, ThetaKind};

/// Node counts and tolerance of the adaptive Gauss-Hermite and trapezoid rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings<T> {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Successive doublings must agree to this fraction of the integral of `|integrand|`.
    pub rel_tol: T,
    /// Allowed imaginary residue of a real expectation, relative to its scale.
    pub imag_tol: T,
}

impl<T: Real> Default for QuadratureSettings<T> {
    fn default() -> Self {
        Self {
            initial_nodes: 64,
            max_nodes: 512,
            rel_tol: T::lit(1e-10),
            imag_tol: T::lit(1e-9),
        }
    }
}

/// Point `(t, x)` of `[0, t_star) x [0, 2 pi r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint<T> {
    pub t: T,
    pub x: T,
}

impl<T> SpaceTimePoint<T> {
    pub fn new(t: T, x: T) -> Self {
        Self { t, x }
    }
}

/// `N >= 2` distinct points `u_1 < ... < u_N` in `[0, 2 pi r)` with shifted
/// center of mass `ubar` in `(0, 2 pi r)`, together with the theta
/// denominators shared by every entire function built on them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration<T> {
    points: Vec<T>,
    geometry: EllipticGeometry<T>,
    ubar: T,
    pub policy: SeriesPolicy<T>,
    pub quadrature: QuadratureSettings<T>,
}

impl<T: Real> PointConfiguration<T> {
    /// Default separation threshold as a fraction of `2 pi r`.
    pub const SEPARATION: f64 = 1e-8;

    pub fn new(points: Vec<T>, r: T, t_star: T) -> Result<Self> {
        let geometry = EllipticGeometry::new(r, t_star)?;
        let circle = geometry.circle();
        let n = points.len();
        if n < 2 {
            return Err(invalid("points", "at least two points are required"));
        }
        let period = circle.period();
        if let Some(&x) = points.iter().find(|&&x| !(x >= T::zero() && x < period)) {
            return Err(invalid("points", format!("{x} outside [0, 2 pi r)")));
        }
        if points.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("points", "points must be sorted ascending"));
        }
        let gap = min_gap(circle, &points);
        if !(gap > T::lit(Self::SEPARATION) * period) {
            return Err(Error::SeparationTooSmall { gap: gap.as_f64() });
        }
        let ubar = circle.center_of_mass(&points);
        if !(ubar > T::zero() && ubar < period) {
            return Err(Error::OutsideAlcove {
                reason: format!("center of mass {ubar} outside (0, 2 pi r)"),
            });
        }
        Ok(Self {
            points,
            geometry,
            ubar,
            policy: SeriesPolicy::default(),
            quadrature: QuadratureSettings::default(),
        })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn geometry(&self) -> &EllipticGeometry<T> {
        &self.geometry
    }

    pub fn circle(&self) -> &CircleGeom<T> {
        self.geometry.circle()
    }

    pub fn t_star(&self) -> T {
        self.geometry.t_star()
    }

    /// `ubar = sum u_j - kappa_N`.
    pub fn ubar(&self) -> T {
        self.ubar
    }

    /// Parity `p(N)` of the wrapped kernel driving the configuration.
    pub fn parity(&self) -> Parity {
        Parity::of_count(self.n())
    }

    /// Smallest distance between neighbouring points, the wrap gap included.
    pub fn min_gap(&self) -> T {
        min_gap(self.circle(), &self.points)
    }

    /// `N tau(0) = i N t_star / 2 pi r^2`.
    pub(crate) fn tau_n(&self) -> ModularParam<T> {
        let r = self.circle().r();
        ModularParam::imaginary(T::count(self.n()) * self.t_star() / (T::TAU() * r * r))
            .expect("positive horizon")
    }

    /// `-1 / (N tau(0)) = 2 pi i r^2 / N t_star`.
    pub(crate) fn tau_dual(&self) -> ModularParam<T> {
        let r = self.circle().r();
        ModularParam::imaginary(T::TAU() * r * r / (T::count(self.n()) * self.t_star()))
            .expect("positive horizon")
    }

    /// `theta1(w / 2 pi r; N tau(0))`.
    pub(crate) fn theta_n(&self, w: C<T>) -> Result<C<T>> {
        theta(ThetaKind::One, w / creal(self.circle().period()), self.tau_n(), &self.policy)
    }

    /// `theta1(-i r w / N t_star; 2 pi i r^2 / N t_star)`, the transformed
    /// counterpart of [`theta_n`](Self::theta_n) without its Gaussian factor.
    pub(crate) fn theta_dual(&self, w: C<T>) -> Result<C<T>> {
        let scale = self.circle().r() / (T::count(self.n()) * self.t_star());
        theta(ThetaKind::One, w * cimag(-scale), self.tau_dual(), &self.policy)
    }

    pub(crate) fn check_time(&self, t: T) -> Result<()> {
        if t >= T::zero() && t < self.t_star() {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                limit: self.t_star().as_f64(),
            })
        }
    }
}

pub(crate) fn min_gap<T: Real>(circle: &CircleGeom<T>, points: &[T]) -> T {
    let n = points.len();
    let mut gap = points[0] + circle.period() - points[n - 1];
    for w in points.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}
