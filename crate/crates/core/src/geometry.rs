//! Circle geometry, the elliptic clock and configuration bookkeeping.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Sign `+1` or `-1` attached to winding; `p(N) = (-1)^N` for `N` particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn of_count(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }

    pub fn sign<T: Real>(self) -> T {
        match self {
            Parity::Plus => T::one(),
            Parity::Minus => -T::one(),
        }
    }

    /// `sign^k` for an integer winding number `k`.
    pub fn power<T: Real>(self, k: i64) -> T {
        if self == Parity::Minus && k.rem_euclid(2) == 1 {
            -T::one()
        } else {
            T::one()
        }
    }
}

/// Circle of radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleGeom<T> {
    r: T,
}

impl<T: Real> CircleGeom<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(invalid("r", format!("must be positive and finite, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// Circumference `2 pi r`.
    pub fn period(&self) -> T {
        T::TAU() * self.r
    }

    /// Boundary tolerance used for domain checks, `1e-9 * 2 pi r`.
    pub fn domain_eps(&self) -> T {
        T::lit(1e-9) * self.period()
    }

    /// Reduces `x` into `[0, 2 pi r)`.
    pub fn wrap(&self, x: T) -> T {
        let p = self.period();
        let y = x - (x / p).floor() * p;
        if y >= p {
            y - p
        } else {
            y
        }
    }

    /// `Im tau = t / (2 pi r^2)` of the wrapped kernel at time `t`.
    pub fn kernel_im_tau(&self, t: T) -> T {
        t / (T::TAU() * self.r * self.r)
    }

    /// `kappa_N = (pi r / 2)(2N - 3 + p(N))`.
    pub fn kappa(&self, n: usize) -> T {
        let p = Parity::of_count(n).sign::<T>();
        T::FRAC_PI_2() * self.r * (T::count(2 * n) - T::lit(3.0) + p)
    }

    /// Shifted center of mass `sum x_j - kappa_N`.
    pub fn center_of_mass(&self, x: &[T]) -> T {
        x.iter().copied().sum::<T>() - self.kappa(x.len())
    }

    /// Pinning configuration `v_j = (pi r / 2N)(4j - 3 + p(N))`, `j = 1..N`.
    pub fn pinning_points(&self, n: usize) -> Vec<T> {
        let p = Parity::of_count(n).sign::<T>();
        let scale = T::PI() * self.r / T::count(2 * n);
        (1..=n)
            .map(|j| scale * (T::count(4 * j) - T::lit(3.0) + p))
            .collect()
    }

    /// Checks `x_1 < ... < x_N < x_1 + 2 pi r` and `0 < xbar < 2 pi r` with
    /// margin [`domain_eps`](Self::domain_eps).
    pub fn check_alcove(&self, x: &[T]) -> Result<()> {
        let eps = self.domain_eps();
        let n = x.len();
        if n == 0 {
            return Err(invalid("x", "empty configuration"));
        }
        for w in x.windows(2) {
            if !(w[1] - w[0] > eps) {
                return Err(Error::OutsideAlcove {
                    reason: format!("points not strictly increasing ({} >= {})", w[0], w[1]),
                });
            }
        }
        if n > 1 && !(x[0] + self.period() - x[n - 1] > eps) {
            return Err(Error::OutsideAlcove {
                reason: "spread exceeds one period".into(),
            });
        }
        if n > 1 {
            let xbar = self.center_of_mass(x);
            if !(xbar > eps && xbar < self.period() - eps) {
                return Err(Error::OutsideAlcove {
                    reason: format!("center of mass {xbar} outside (0, 2 pi r)"),
                });
            }
        }
        Ok(())
    }

    /// Checks `eps < x < 2 pi r - eps`.
    pub fn check_interval(&self, x: T) -> Result<()> {
        let eps = self.domain_eps();
        if x > eps && x < self.period() - eps {
            Ok(())
        } else {
            Err(Error::OutsideAlcove {
                reason: format!("{x} outside (0, 2 pi r)"),
            })
        }
    }
}

/// Circle radius `r` and horizon `t_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticGeometry<T> {
    circle: CircleGeom<T>,
    t_star: T,
}

impl<T: Real> EllipticGeometry<T> {
    pub fn new(r: T, t_star: T) -> Result<Self> {
        let circle = CircleGeom::new(r)?;
        if !(t_star > T::zero()) || !t_star.is_finite() {
            return Err(invalid("t_star", format!("must be positive and finite, got {t_star}")));
        }
        Ok(Self { circle, t_star })
    }

    pub fn circle(&self) -> &CircleGeom<T> {
        &self.circle
    }

    pub fn r(&self) -> T {
        self.circle.r
    }

    pub fn t_star(&self) -> T {
        self.t_star
    }

    /// Clock at time `t in [0, t_star)`.
    pub fn clock(&self, t: T) -> Result<EllipticClock<T>> {
        if !(t >= T::zero()) || !(t < self.t_star) {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                limit: self.t_star.as_f64(),
            });
        }
        Ok(EllipticClock { geom: *self, t })
    }
}

/// Geometry together with a time `t in [0, t_star)`.
///
/// The elliptic modulus is `tau(t) = i (t_star - t) / (2 pi r^2)`; the
/// half-periods are `omega1 = pi r` and `omega3(t) = i (t_star - t) / (2 r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticClock<T> {
    geom: EllipticGeometry<T>,
    t: T,
}

impl<T: Real> EllipticClock<T> {
    pub fn geometry(&self) -> &EllipticGeometry<T> {
        &self.geom
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn remaining(&self) -> T {
        self.geom.t_star - self.t
    }

    /// `Im tau(t)`.
    pub fn im_tau(&self) -> T {
        self.remaining() / (T::TAU() * self.geom.r() * self.geom.r())
    }

    /// `Im (N tau(t))`.
    pub fn im_tau_n(&self, n: usize) -> T {
        self.im_tau() * T::count(n)
    }

    /// `Im omega3(t) = (t_star - t) / (2 r)`.
    pub fn im_omega3(&self) -> T {
        self.remaining() / (T::lit(2.0) * self.geom.r())
    }

    pub fn at(&self, t: T) -> Result<Self> {
        self.geom.clock(t)
    }
}
