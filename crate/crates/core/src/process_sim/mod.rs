//! Euler-Maruyama simulation of the elliptic Bessel process and the elliptic
//! Dyson model, Girsanov weight tracking along Brownian paths, the pinned
//! quadrature representation of the three-dimensional case and the
//! trigonometric and flat limits of the drifts.
//!
//! Paths are simulated on the unwrapped coordinates and reported modulo
//! `2 pi r`. Every path draws from its own ChaCha stream keyed by
//! `(seed, path index)`, so ensembles do not depend on the worker count.

mod ensemble;
mod limits;
mod pinned;
mod scheme;

pub use ensemble::{Estimate, Exclusion, PathEnsemble, PathRecord};
pub use limits::{limit_drift, limit_drift_check, LimitDriftCase, LimitKind};
pub use pinned::{check_reflection_observable, pinned_expectation_ebes3};
pub use scheme::{girsanov_weight_track, simulate, simulate_ebes, simulate_edys};

use crate::error::{invalid, Error, Result};
use crate::geometry::EllipticGeometry;
use crate::scalar::Real;
use crate::special_functions::SeriesPolicy;

/// Elliptic Bessel process with dimension `d > 1` started at `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EBesConfig<T> {
    d: T,
    geometry: EllipticGeometry<T>,
    u: T,
}

impl<T: Real> EBesConfig<T> {
    pub fn new(d: T, r: T, t_star: T, u: T) -> Result<Self> {
        if !(d > T::one()) || !d.is_finite() {
            return Err(invalid("d", format!("must exceed 1, got {d}")));
        }
        let geometry = EllipticGeometry::new(r, t_star)?;
        geometry.circle().check_interval(u)?;
        Ok(Self { d, geometry, u })
    }

    pub fn d(&self) -> T {
        self.d
    }

    pub fn geometry(&self) -> &EllipticGeometry<T> {
        &self.geometry
    }

    pub fn u(&self) -> T {
        self.u
    }

    /// `(d - 1) / 2`, the strength of the log-theta drift.
    pub fn drift_strength(&self) -> T {
        (self.d - T::one()) / T::lit(2.0)
    }

    /// Below dimension 2 the boundary is hit with positive probability.
    pub fn is_absorbing(&self) -> bool {
        self.d < T::lit(2.0)
    }
}

/// Which of the two equivalent drift expressions the Dyson simulation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftForm {
    /// Pairwise `U_N'` terms plus the center-of-mass term at `x_bar`.
    #[default]
    Pairwise,
    /// `theta1` log-derivatives of the gaps plus a `theta2` term in `sum x`.
    ThetaTwo,
}

/// Elliptic Dyson model with `N = u.len() >= 2` particles.
#[derive(Debug, Clone, PartialEq)]
pub struct EDysConfig<T> {
    beta: T,
    geometry: EllipticGeometry<T>,
    u: Vec<T>,
    pub drift_form: DriftForm,
}

impl<T: Real> EDysConfig<T> {
    /// Fails with [`Error::OutsideAlcove`] when `u` collides or leaves the
    /// restricted alcove.
    pub fn new(beta: T, r: T, t_star: T, u: Vec<T>) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(invalid("beta", format!("must be positive, got {beta}")));
        }
        if u.len() < 2 {
            return Err(invalid("u", "the Dyson model needs at least two particles"));
        }
        let geometry = EllipticGeometry::new(r, t_star)?;
        geometry.circle().check_alcove(&u)?;
        Ok(Self {
            beta,
            geometry,
            u,
            drift_form: DriftForm::Pairwise,
        })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn geometry(&self) -> &EllipticGeometry<T> {
        &self.geometry
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// Below `beta = 1` particles collide with positive probability.
    pub fn is_absorbing(&self) -> bool {
        self.beta < T::one()
    }
}

/// Either process, for drivers that dispatch on a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessConfig<T> {
    Bessel(EBesConfig<T>),
    Dyson(EDysConfig<T>),
}

impl<T: Real> ProcessConfig<T> {
    pub fn geometry(&self) -> &EllipticGeometry<T> {
        match self {
            ProcessConfig::Bessel(c) => c.geometry(),
            ProcessConfig::Dyson(c) => c.geometry(),
        }
    }
}

/// Time stepping, safeguards and ensemble size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig<T> {
    /// Base step; each recording interval is split into equal steps no longer than this.
    pub dt: T,
    /// Local step halvings allowed to satisfy the drift CFL condition.
    pub max_substep_halvings: u32,
    /// A step is accepted when `|drift| * h <= drift_cfl * distance to the boundary`.
    pub drift_cfl: T,
    pub seed: u64,
    pub n_paths: usize,
    /// Number of equal recording intervals in `[0, horizon]`.
    pub n_records: usize,
    /// Largest admissible horizon as a fraction of `t_star`.
    pub horizon_cap: T,
    /// Gaussian redraws allowed per step for non-absorbing parameters.
    pub max_resamples: u32,
    /// Paths whose log-weight exceeds this are flagged and excluded.
    pub max_log_weight: T,
    /// Kill Brownian paths by the bridge crossing probability between steps.
    pub bridge_correction: bool,
    pub policy: SeriesPolicy<T>,
}

impl<T: Real> SchemeConfig<T> {
    /// Defaults for a process with horizon parameter `t_star`.
    pub fn for_t_star(t_star: T) -> Self {
        Self {
            dt: T::lit(1e-4) * t_star,
            max_substep_halvings: 20,
            drift_cfl: T::lit(0.25),
            seed: 0,
            n_paths: 1000,
            n_records: 1,
            horizon_cap: T::lit(0.98),
            max_resamples: 1000,
            max_log_weight: T::lit(50.0),
            bridge_correction: true,
            policy: SeriesPolicy::default(),
        }
    }

    pub fn validate(&self, geometry: &EllipticGeometry<T>, horizon: T) -> Result<()> {
        let t_star = geometry.t_star();
        if !(self.dt > T::zero()) || !(self.dt < t_star) {
            return Err(invalid("dt", format!("must lie in (0, t_star), got {}", self.dt)));
        }
        if !(self.drift_cfl > T::zero() && self.drift_cfl < T::one()) {
            return Err(invalid("drift_cfl", format!("must lie in (0, 1), got {}", self.drift_cfl)));
        }
        if !(self.horizon_cap > T::zero() && self.horizon_cap < T::one()) {
            return Err(invalid("horizon_cap", "must lie in (0, 1)"));
        }
        if self.n_paths == 0 || self.n_records == 0 {
            return Err(invalid("n_paths", "path and record counts must be positive"));
        }
        let limit = self.horizon_cap * t_star;
        if !(horizon > T::zero()) || horizon > limit {
            return Err(Error::TimeOutOfRange {
                t: horizon.as_f64(),
                limit: limit.as_f64(),
            });
        }
        Ok(())
    }
}
