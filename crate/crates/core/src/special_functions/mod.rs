//! Jacobi theta functions, Dedekind eta, Weierstrass zeta/wp and Villat's
//! function.
//!
//! Theta functions follow the convention `q = exp(i pi tau)`, `z = exp(i pi v)`:
//!
//! * `theta0(v) = sum (-1)^n q^(n^2) z^(2n)`
//! * `theta1(v) = i sum (-1)^n q^((n-1/2)^2) z^(2n-1)`
//! * `theta2(v) = sum q^((n-1/2)^2) z^(2n-1)`
//! * `theta3(v) = sum q^(n^2) z^(2n)`
//!
//! Two evaluation paths exist. The complex path ([`theta_jet`]) handles
//! arbitrary complex `v` and `tau`, switching to the imaginary-transformed
//! series when `Im tau` is small. The real path ([`theta_real_jet`]) is a fast
//! route for real `v` and purely imaginary `tau`, used by the drift and
//! potential code; it sums the Gaussian (winding) form when `Im tau` is small.

mod eta;
mod identities;
mod real_theta;
mod theta;
mod villat;
mod weierstrass;

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use eta::{dedekind_eta, eta1, log_dedekind_eta, log_eta_derivative};
pub use identities::{
    forrester_residual, jacobi_imaginary_residual, theta_heat_equation_residual,
    IdentityResidual,
};
pub use real_theta::{theta_real_jet, theta_real_log_jet, RealLogJet};
pub use theta::{theta, theta_jet, theta_series_jet, zero_distance};
pub use villat::villat;
pub use weierstrass::Lattice;

/// Which of the four Jacobi theta functions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaKind {
    Zero,
    One,
    Two,
    Three,
}

impl ThetaKind {
    pub const ALL: [ThetaKind; 4] = [
        ThetaKind::Zero,
        ThetaKind::One,
        ThetaKind::Two,
        ThetaKind::Three,
    ];

    /// `theta1` is odd in `v`; the others are even.
    pub fn is_odd(self) -> bool {
        matches!(self, ThetaKind::One)
    }

    pub fn index(self) -> usize {
        match self {
            ThetaKind::Zero => 0,
            ThetaKind::One => 1,
            ThetaKind::Two => 2,
            ThetaKind::Three => 3,
        }
    }
}

/// Truncation and representation-switching policy for all series.
///
/// A series stops after three consecutive terms fall below
/// `abs_tol + rel_tol * |partial sum|`. When `Im tau < im_tau_switch` the
/// theta and eta routines evaluate through the modular transformation
/// `tau -> -1/tau` instead of the direct nome series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_terms: usize,
    pub im_tau_switch: T,
}

impl<T: Real> Default for SeriesPolicy<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-15),
            rel_tol: T::lit(1e-14),
            max_terms: 10_000,
            im_tau_switch: T::one(),
        }
    }
}

impl<T: Real> SeriesPolicy<T> {
    /// Always sum the direct nome series.
    pub fn never_switch() -> Self {
        Self {
            im_tau_switch: T::zero(),
            ..Self::default()
        }
    }

    /// Always go through the imaginary transformation.
    pub fn always_switch() -> Self {
        Self {
            im_tau_switch: T::infinity(),
            ..Self::default()
        }
    }

    pub(crate) fn threshold(&self, partial: T) -> T {
        self.abs_tol + self.rel_tol * partial
    }
}

/// Modular parameter `tau` with `Im tau > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularParam<T> {
    tau: Complex<T>,
}

impl<T: Real> ModularParam<T> {
    pub fn new(tau: Complex<T>) -> Result<Self> {
        if !(tau.im > T::zero()) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::NonPositiveImTau {
                im_tau: tau.im.as_f64(),
            });
        }
        Ok(Self { tau })
    }

    /// `tau = i * im_tau`.
    pub fn imaginary(im_tau: T) -> Result<Self> {
        Self::new(Complex::new(T::zero(), im_tau))
    }

    pub fn tau(&self) -> Complex<T> {
        self.tau
    }

    pub fn im(&self) -> T {
        self.tau.im
    }

    /// `tau -> n * tau` for a positive integer multiplier.
    pub fn scaled(&self, n: usize) -> Self {
        Self {
            tau: self.tau * T::count(n),
        }
    }
}

/// Value together with its first and second derivatives in `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaJet<V> {
    pub value: V,
    pub d1: V,
    pub d2: V,
}

impl<V> ThetaJet<V>
where
    V: Copy + Add<Output = V> + Sub<Output = V> + Mul<Output = V> + std::ops::Div<Output = V>,
{
    pub fn scale(self, factor: V) -> Self {
        Self {
            value: self.value * factor,
            d1: self.d1 * factor,
            d2: self.d2 * factor,
        }
    }

    /// `theta' / theta`.
    pub fn log_d1(&self) -> V {
        self.d1 / self.value
    }

    /// `(theta'/theta)' = theta''/theta - (theta'/theta)^2`.
    pub fn log_d2(&self) -> V {
        let l = self.d1 / self.value;
        self.d2 / self.value - l * l
    }
}
