use super::SeriesPolicy;
use crate::error::{invalid, Error, Result};
use crate::scalar::{creal, Real, C};

/// Villat's function `K_q(z) = lim_{N->inf} sum_{n=-N}^{N} (1 + q^(2n) z) / (1 - q^(2n) z)`
/// for `0 < q < 1`.
///
/// The `n` and `-n` terms are summed together; each pair is `O(q^(2n))`.
pub fn villat<T: Real>(q: T, z: C<T>, policy: &SeriesPolicy<T>) -> Result<C<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(invalid("q", format!("must lie in (0, 1), got {}", q)));
    }
    let one = creal(T::one());
    let pole_check = |w: C<T>| -> Result<()> {
        let d = (one - w).norm();
        if d < T::lit(1e-13) {
            Err(Error::PoleProximity { distance: d.as_f64() })
        } else {
            Ok(())
        }
    };
    pole_check(z)?;
    let mut acc = (one + z) / (one - z);
    let q2 = q * q;
    let mut power = T::one();
    let mut small = 0;
    for _ in 1..=policy.max_terms {
        power = power * q2;
        let forward = z * power;
        pole_check(forward)?;
        // Term with q^(-2n): (1 + z/p) / (1 - z/p) = (p + z) / (p - z).
        let backward_den = creal(power) - z;
        if backward_den.norm() < T::lit(1e-13) * power {
            return Err(Error::PoleProximity {
                distance: (backward_den.norm() / power).as_f64(),
            });
        }
        let pair = (one + forward) / (one - forward) + (creal(power) + z) / backward_den;
        acc = acc + pair;
        if pair.norm() <= policy.threshold(acc.norm()) {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn matches_long_symmetric_partial_sum() {
        let (q, z) = (0.6f64, cplx(0.3, 0.8));
        let mut s = creal(0.0);
        for n in -60i32..=60 {
            let w = z * q.powi(2 * n);
            s += (creal(1.0) + w) / (creal(1.0) - w);
        }
        let got = villat(q, z, &SeriesPolicy::default()).unwrap();
        assert!((got - s).norm() < 1e-12);
    }

    #[test]
    fn unit_circle_values_are_imaginary() {
        // Pairs of conjugate terms make K_q(e^{ix}) purely imaginary.
        for &x in &[0.3, 1.9, 4.4] {
            let z = C::from_polar(1.0f64, x);
            let k = villat(0.4, z, &SeriesPolicy::default()).unwrap();
            assert!(k.re.abs() < 1e-13 * k.norm());
        }
    }

    #[test]
    fn rejects_bad_nome_and_poles() {
        assert!(villat(1.2, cplx(0.5, 0.5), &SeriesPolicy::default()).is_err());
        assert!(matches!(
            villat(0.5, cplx(0.25, 0.0), &SeriesPolicy::default()),
            Err(Error::PoleProximity { .. })
        ));
    }
}
