use super::{eta1, theta_jet, zero_distance, ModularParam, SeriesPolicy, ThetaKind};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Period lattice `{2 m omega1 + 2 n omega3}` with `Im(omega3/omega1) > 0`.
///
/// Zeta and wp are evaluated through theta1:
/// `zeta(z) = eta1 z / omega1 + theta1'(v)/(2 omega1 theta1(v))`, `v = z / (2 omega1)`.
#[derive(Debug, Clone, Copy)]
pub struct Lattice<T> {
    omega1: C<T>,
    omega3: C<T>,
    tau: ModularParam<T>,
    eta1: C<T>,
    policy: SeriesPolicy<T>,
}

/// Points closer than this (relative to `|2 omega1|`) to a lattice point are
/// rejected as poles.
const POLE_THRESHOLD: f64 = 1e-13;

impl<T: Real> Lattice<T> {
    pub fn new(omega1: C<T>, omega3: C<T>, policy: SeriesPolicy<T>) -> Result<Self> {
        let tau = ModularParam::new(omega3 / omega1)?;
        let eta1 = eta1(omega1, omega3, &policy)?;
        Ok(Self {
            omega1,
            omega3,
            tau,
            eta1,
            policy,
        })
    }

    pub fn omega1(&self) -> C<T> {
        self.omega1
    }

    pub fn omega3(&self) -> C<T> {
        self.omega3
    }

    /// `zeta(omega1)`.
    pub fn eta1(&self) -> C<T> {
        self.eta1
    }

    fn reduced(&self, z: C<T>) -> Result<C<T>> {
        let v = z / (self.omega1 * T::lit(2.0));
        let distance = zero_distance(ThetaKind::One, v, self.tau);
        if distance < T::lit(POLE_THRESHOLD) {
            return Err(Error::PoleProximity {
                distance: distance.as_f64(),
            });
        }
        Ok(v)
    }

    pub fn zeta(&self, z: C<T>) -> Result<C<T>> {
        let v = self.reduced(z)?;
        let jet = theta_jet(ThetaKind::One, v, self.tau, &self.policy)?;
        let two_w1 = self.omega1 * T::lit(2.0);
        Ok(self.eta1 * z / self.omega1 + jet.log_d1() / two_w1)
    }

    /// `wp(z) = -zeta'(z)`.
    pub fn wp(&self, z: C<T>) -> Result<C<T>> {
        let v = self.reduced(z)?;
        let jet = theta_jet(ThetaKind::One, v, self.tau, &self.policy)?;
        let two_w1 = self.omega1 * T::lit(2.0);
        Ok(-self.eta1 / self.omega1 - jet.log_d2() / (two_w1 * two_w1))
    }

    /// `(zeta(z), wp(z))` from a single theta evaluation.
    pub fn zeta_wp(&self, z: C<T>) -> Result<(C<T>, C<T>)> {
        let v = self.reduced(z)?;
        let jet = theta_jet(ThetaKind::One, v, self.tau, &self.policy)?;
        let two_w1 = self.omega1 * T::lit(2.0);
        let zeta = self.eta1 * z / self.omega1 + jet.log_d1() / two_w1;
        let wp = -self.eta1 / self.omega1 - jet.log_d2() / (two_w1 * two_w1);
        Ok((zeta, wp))
    }

    /// Residual of the three-point zeta identity
    /// `zeta(a-b)zeta(a-c) + zeta(b-a)zeta(b-c) + zeta(c-a)zeta(c-b)
    ///  = (zeta(a-b)^2 + zeta(b-c)^2 + zeta(c-a)^2 - wp(a-b) - wp(b-c) - wp(c-a)) / 2`.
    pub fn three_point_residual(&self, a: C<T>, b: C<T>, c: C<T>) -> Result<T> {
        let (zab, pab) = self.zeta_wp(a - b)?;
        let (zbc, pbc) = self.zeta_wp(b - c)?;
        let (zca, pca) = self.zeta_wp(c - a)?;
        let lhs = zab * (-zca) + (-zab) * zbc + zca * (-zbc);
        let rhs = (zab * zab + zbc * zbc + zca * zca - pab - pbc - pca) * T::lit(0.5);
        Ok((lhs - rhs).norm() / (lhs.norm().max(rhs.norm()).max(T::one())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, creal};

    /// Truncated lattice sums over |m|, |n| <= cutoff.
    fn lattice_sums(z: C<f64>, w1: C<f64>, w3: C<f64>, cutoff: i64) -> (C<f64>, C<f64>) {
        let mut zeta = creal(1.0) / z;
        let mut wp = creal(1.0) / (z * z);
        for m in -cutoff..=cutoff {
            for n in -cutoff..=cutoff {
                if m == 0 && n == 0 {
                    continue;
                }
                let om = w1 * (2 * m) as f64 + w3 * (2 * n) as f64;
                let d = z - om;
                zeta += creal(1.0) / d + creal(1.0) / om + z / (om * om);
                wp += creal(1.0) / (d * d) - creal(1.0) / (om * om);
            }
        }
        (zeta, wp)
    }

    /// Richardson extrapolation in the cutoff: the truncation error of the
    /// symmetric square sum behaves like c / R^2.
    fn extrapolated(z: C<f64>, w1: C<f64>, w3: C<f64>) -> (C<f64>, C<f64>) {
        let (z1, p1) = lattice_sums(z, w1, w3, 60);
        let (z2, p2) = lattice_sums(z, w1, w3, 120);
        ((z2 * 4.0 - z1) / 3.0, (p2 * 4.0 - p1) / 3.0)
    }

    #[test]
    fn theta_route_matches_lattice_sums() {
        let w1 = cplx(std::f64::consts::PI, 0.0);
        let w3 = cplx(0.0, 1.3);
        let lat = Lattice::new(w1, w3, SeriesPolicy::default()).unwrap();
        for &z in &[cplx(0.7, 0.0), cplx(1.1, 0.4), cplx(-2.0, 0.9)] {
            let (zeta, wp) = extrapolated(z, w1, w3);
            let (gz, gw) = lat.zeta_wp(z).unwrap();
            assert!((gz - zeta).norm() < 1e-8, "zeta {z}: {gz} vs {zeta}");
            assert!((gw - wp).norm() < 1e-8, "wp {z}: {gw} vs {wp}");
        }
    }

    #[test]
    fn zeta_at_half_period_is_eta1() {
        let lat = Lattice::new(cplx(1.0, 0.0), cplx(0.2, 0.9), SeriesPolicy::default()).unwrap();
        let z = lat.zeta(lat.omega1()).unwrap();
        assert!((z - lat.eta1()).norm() < 1e-13);
    }

    #[test]
    fn three_point_identity_holds() {
        let lat = Lattice::new(cplx(1.0, 0.0), cplx(0.0, 0.8), SeriesPolicy::default()).unwrap();
        let r = lat
            .three_point_residual(cplx(0.1, 0.2), cplx(0.9, -0.3), cplx(-0.4, 0.5))
            .unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn poles_are_rejected() {
        let lat = Lattice::new(cplx(1.0, 0.0), cplx(0.0, 0.8), SeriesPolicy::default()).unwrap();
        let z = cplx(2.0, 1.6);
        assert!(matches!(lat.zeta(z), Err(Error::PoleProximity { .. })));
        assert!(lat.wp(z + cplx(1e-6, 0.0)).is_ok());
    }
}
