//! Elliptic Bessel and elliptic Dyson processes on a circle of radius `r`
//! with a finite horizon `t_star`.
//!
//! The crate is layered bottom-up:
//!
//! * [`special_functions`]: Jacobi theta, Dedekind eta, Weierstrass and Villat functions.
//! * [`heat_kernels`]: wrapped Brownian kernels on the circle and Karlin-McGregor determinants.
//! * [`potentials`]: the elliptic log-potential, its Schrödinger potentials and ground energy.
//! * [`process_sim`]: Euler-Maruyama simulation, Girsanov weights and pinned expectations.
//! * [`determinantal`]: martingale functions, correlation kernel and Fredholm expansions.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// Negated comparisons are the NaN-rejecting parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod determinantal;
pub mod error;
pub mod geometry;
pub mod heat_kernels;
pub mod linalg;
pub mod potentials;
pub mod process_sim;
pub mod quadrature;
pub mod scalar;
pub mod special_functions;

pub use error::{Error, Result};
pub use geometry::{CircleGeom, EllipticClock, EllipticGeometry, Parity};
pub use scalar::Real;

pub type SeriesPolicy64 = special_functions::SeriesPolicy<f64>;
pub type ModularParam64 = special_functions::ModularParam<f64>;
pub type CircleGeom64 = CircleGeom<f64>;
pub type EllipticGeometry64 = EllipticGeometry<f64>;
pub type EllipticClock64 = EllipticClock<f64>;
pub type EBesConfig64 = process_sim::EBesConfig<f64>;
pub type EDysConfig64 = process_sim::EDysConfig<f64>;
pub type SchemeConfig64 = process_sim::SchemeConfig<f64>;
pub type PathEnsemble64 = process_sim::PathEnsemble<f64>;
pub type PointConfiguration64 = determinantal::PointConfiguration<f64>;
pub type GeneralConfiguration64 = determinantal::GeneralConfiguration<f64>;
pub type SpaceTimePoint64 = determinantal::SpaceTimePoint<f64>;
