//! Euler-Maruyama stepping with drift CFL sub-steps, boundary handling and
//! Girsanov weights along Brownian paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::ensemble::{Exclusion, PathEnsemble, PathRecord};
use super::{DriftForm, EBesConfig, EDysConfig, ProcessConfig, SchemeConfig};
use crate::error::Result;
use crate::geometry::{CircleGeom, EllipticGeometry};
use crate::potentials::{grad_w_n, grad_w_n_theta_form, log_h_n_r, u_n_dx_extended, v_1_prefactor, v_n_extended};
use crate::scalar::Real;
use crate::special_functions::{theta_real_log_jet, SeriesPolicy, ThetaKind};

/// Random stream of path `index`.
pub(crate) fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// The drift, potential and weight ratio of one of the two processes.
enum Model<'a, T> {
    Bessel(&'a EBesConfig<T>),
    Dyson(&'a EDysConfig<T>),
}

impl<T: Real> Model<'_, T> {
    fn geometry(&self) -> &EllipticGeometry<T> {
        match self {
            Model::Bessel(c) => c.geometry(),
            Model::Dyson(c) => c.geometry(),
        }
    }

    fn start(&self) -> Vec<T> {
        match self {
            Model::Bessel(c) => vec![c.u()],
            Model::Dyson(c) => c.u().to_vec(),
        }
    }

    fn absorbing(&self) -> bool {
        match self {
            Model::Bessel(c) => c.is_absorbing(),
            Model::Dyson(c) => c.is_absorbing(),
        }
    }

    fn drift(&self, t: T, x: &[T], out: &mut [T], policy: &SeriesPolicy<T>) -> Result<()> {
        let clock = self.geometry().clock(t)?;
        match self {
            Model::Bessel(c) => {
                out[0] = -c.drift_strength() * u_n_dx_extended(&clock, 1, x[0], policy)?;
            }
            Model::Dyson(c) => {
                let grad = match c.drift_form {
                    DriftForm::Pairwise => grad_w_n(&clock, x, policy)?,
                    DriftForm::ThetaTwo => grad_w_n_theta_form(&clock, x, policy)?,
                };
                let scale = -c.beta() / T::lit(2.0);
                for (o, g) in out.iter_mut().zip(grad) {
                    *o = scale * g;
                }
            }
        }
        Ok(())
    }

    /// Logarithm of the space-time harmonic factor whose ratio forms the weight.
    fn log_ratio_factor(&self, t: T, x: &[T], policy: &SeriesPolicy<T>) -> Result<T> {
        let clock = self.geometry().clock(t)?;
        match self {
            Model::Bessel(c) => {
                let period = clock.geometry().circle().period();
                let jet = theta_real_log_jet(ThetaKind::One, x[0] / period, clock.im_tau_n(1), policy)?;
                Ok(c.drift_strength() * jet.log_abs)
            }
            Model::Dyson(c) => Ok(c.beta() / T::lit(2.0) * log_h_n_r(&clock, c.beta(), x, policy)?.0),
        }
    }

    fn potential(&self, t: T, x: &[T], policy: &SeriesPolicy<T>) -> Result<T> {
        let clock = self.geometry().clock(t)?;
        match self {
            Model::Bessel(c) => {
                let pre = v_1_prefactor(c.d());
                if pre == T::zero() {
                    return Ok(T::zero());
                }
                let slope = u_n_dx_extended(&clock, 1, x[0], policy)?;
                Ok(pre * slope * slope)
            }
            Model::Dyson(c) => v_n_extended(&clock, c.beta(), x, policy),
        }
    }
}

/// Distances to the walls of the fundamental domain (interval or restricted
/// alcove). Each wall is a linear function `c_i(x) > 0`.
fn walls<T: Real>(circle: &CircleGeom<T>, x: &[T], out: &mut Vec<T>) {
    out.clear();
    let p = circle.period();
    let n = x.len();
    if n == 1 {
        out.push(x[0]);
        out.push(p - x[0]);
        return;
    }
    for j in 0..n - 1 {
        out.push(x[j + 1] - x[j]);
    }
    out.push(x[0] + p - x[n - 1]);
    let xbar = circle.center_of_mass(x);
    out.push(xbar);
    out.push(p - xbar);
}

/// Rates of change of the walls along the velocity `b`.
fn wall_rates<T: Real>(b: &[T], out: &mut Vec<T>) {
    out.clear();
    let n = b.len();
    if n == 1 {
        out.push(b[0]);
        out.push(-b[0]);
        return;
    }
    for j in 0..n - 1 {
        out.push(b[j + 1] - b[j]);
    }
    out.push(b[0] - b[n - 1]);
    let total: T = b.iter().copied().sum();
    out.push(total);
    out.push(-total);
}

/// Squared gradient norms of the walls: the variance rate of `c_i(b)`
/// for a standard Brownian motion `b`.
fn wall_variance_rates<T: Real>(n: usize) -> Vec<T> {
    if n == 1 {
        return vec![T::one(), T::one()];
    }
    let mut v = vec![T::lit(2.0); n];
    v.push(T::count(n));
    v.push(T::count(n));
    v
}

/// Record times `horizon * k / n_records`.
fn record_times<T: Real>(horizon: T, n_records: usize) -> Vec<T> {
    (0..=n_records)
        .map(|k| horizon * T::count(k) / T::count(n_records))
        .collect()
}

/// Number of equal base steps covering an interval of length `len`.
fn step_count<T: Real>(len: T, dt: T) -> usize {
    (len / dt).ceil().to_usize().unwrap_or(1).max(1)
}

fn push_wrapped<T: Real>(circle: &CircleGeom<T>, x: &[T], out: &mut Vec<T>) {
    out.extend(x.iter().map(|&v| circle.wrap(v)));
}

fn run_drifted<T: Real>(model: &Model<T>, scheme: &SchemeConfig<T>, times: &[T], index: usize) -> PathRecord<T> {
    let circle = *model.geometry().circle();
    let mut x = model.start();
    let n = x.len();
    let absorbing = model.absorbing();
    let mut rng = path_rng(scheme.seed, index);
    let mut rec = PathRecord::new(n * times.len());
    push_wrapped(&circle, &x, &mut rec.states);

    let (mut b, mut prop) = (vec![T::zero(); n], vec![T::zero(); n]);
    let (mut c, mut rate, mut c_new) = (Vec::new(), Vec::new(), Vec::new());
    let mut t = T::zero();
    for window in times.windows(2) {
        let steps = step_count(window[1] - window[0], scheme.dt);
        let h_base = (window[1] - window[0]) / T::count(steps);
        for s in 0..steps {
            let end = if s + 1 == steps {
                window[1]
            } else {
                window[0] + h_base * T::count(s + 1)
            };
            while end - t > h_base * T::lit(1e-9) {
                if model.drift(t, &x, &mut b, &scheme.policy).is_err() {
                    rec.excluded = Some(Exclusion::NumericalFailure);
                    return rec;
                }
                walls(&circle, &x, &mut c);
                wall_rates(&b, &mut rate);
                let cfl_ok = |h: T| {
                    c.iter()
                        .zip(&rate)
                        .all(|(&ci, &ri)| ri.abs() * h <= scheme.drift_cfl * ci)
                };
                let mut h = end - t;
                let mut halvings = 0;
                while !cfl_ok(h) {
                    if halvings == scheme.max_substep_halvings {
                        if !absorbing {
                            rec.excluded = Some(Exclusion::SubstepExhausted);
                            return rec;
                        }
                        break;
                    }
                    h = h / T::lit(2.0);
                    halvings += 1;
                }
                let sq = h.sqrt();
                let mut redraws = 0;
                loop {
                    for j in 0..n {
                        prop[j] = x[j] + b[j] * h + sq * normal::<T>(&mut rng);
                    }
                    walls(&circle, &prop, &mut c_new);
                    if c_new.iter().all(|&v| v > T::zero()) {
                        break;
                    }
                    rec.crossing_proposals += 1;
                    if absorbing {
                        // First wall crossing by linear interpolation.
                        let frac = c
                            .iter()
                            .zip(&c_new)
                            .filter(|(_, &cn)| cn <= T::zero())
                            .map(|(&c0, &cn)| c0 / (c0 - cn))
                            .fold(T::one(), T::min);
                        rec.substeps += 1;
                        rec.absorbed = Some(t + frac * h);
                        return rec;
                    }
                    rec.rejections += 1;
                    redraws += 1;
                    if redraws > scheme.max_resamples {
                        rec.excluded = Some(Exclusion::ResampleExhausted);
                        return rec;
                    }
                }
                rec.substeps += 1;
                x.copy_from_slice(&prop);
                t = t + h;
            }
            t = end;
        }
        push_wrapped(&circle, &x, &mut rec.states);
    }
    rec
}

fn run_weighted<T: Real>(model: &Model<T>, scheme: &SchemeConfig<T>, times: &[T], index: usize) -> PathRecord<T> {
    let circle = *model.geometry().circle();
    let mut x = model.start();
    let n = x.len();
    let policy = &scheme.policy;
    let variance_rates = wall_variance_rates::<T>(n);
    let mut rng = path_rng(scheme.seed, index);
    let mut rec = PathRecord::new(n * times.len());
    let mut weights = Vec::with_capacity(times.len());
    push_wrapped(&circle, &x, &mut rec.states);
    weights.push(T::one());

    let Ok(log_start) = model.log_ratio_factor(T::zero(), &x, policy) else {
        rec.excluded = Some(Exclusion::NumericalFailure);
        return rec;
    };
    let mut potential_integral = T::zero();
    let (mut prop, mut c, mut c_new) = (vec![T::zero(); n], Vec::new(), Vec::new());
    let mut t = T::zero();
    'outer: for window in times.windows(2) {
        let steps = step_count(window[1] - window[0], scheme.dt);
        let h = (window[1] - window[0]) / T::count(steps);
        let sq = h.sqrt();
        for _ in 0..steps {
            match model.potential(t, &x, policy) {
                Ok(v) => potential_integral = potential_integral + v * h,
                Err(_) => {
                    rec.excluded = Some(Exclusion::NumericalFailure);
                    break 'outer;
                }
            }
            for j in 0..n {
                prop[j] = x[j] + sq * normal::<T>(&mut rng);
            }
            rec.substeps += 1;
            walls(&circle, &x, &mut c);
            walls(&circle, &prop, &mut c_new);
            let mut exited = c_new.iter().any(|&v| v <= T::zero());
            if !exited && scheme.bridge_correction {
                // Probability that the Brownian bridge between the two states
                // touches a wall.
                let survive = c
                    .iter()
                    .zip(&c_new)
                    .zip(&variance_rates)
                    .map(|((&a, &b), &s)| T::one() - (-T::lit(2.0) * a * b / (s * h)).exp())
                    .fold(T::one(), |acc, p| acc * p);
                exited = T::lit(rng.random::<f64>()) >= survive;
            }
            if exited {
                rec.crossing_proposals += 1;
                rec.absorbed = Some(t + h);
                break 'outer;
            }
            x.copy_from_slice(&prop);
            t = t + h;
        }
        t = window[1];
        let log_w = match model.log_ratio_factor(t, &x, policy) {
            Ok(l) => l - log_start - potential_integral,
            Err(_) => {
                rec.excluded = Some(Exclusion::NumericalFailure);
                break;
            }
        };
        if !(log_w <= scheme.max_log_weight) {
            rec.excluded = Some(Exclusion::WeightOverflow);
            break;
        }
        push_wrapped(&circle, &x, &mut rec.states);
        weights.push(log_w.exp());
    }
    // The stopped martingale vanishes at the boundary.
    weights.resize(times.len(), T::zero());
    rec.weights = Some(weights);
    rec
}

fn run_ensemble<T: Real>(
    model: &Model<T>,
    scheme: &SchemeConfig<T>,
    horizon: T,
    weighted: bool,
) -> Result<PathEnsemble<T>> {
    scheme.validate(model.geometry(), horizon)?;
    let times = record_times(horizon, scheme.n_records);
    let paths: Vec<PathRecord<T>> = (0..scheme.n_paths)
        .into_par_iter()
        .map(|i| {
            if weighted {
                run_weighted(model, scheme, &times, i)
            } else {
                run_drifted(model, scheme, &times, i)
            }
        })
        .collect();
    let ens = PathEnsemble {
        times,
        n_particles: model.start().len(),
        paths,
    };
    let excluded = scheme.n_paths - ens.included_count();
    if excluded > 0 {
        log::warn!("{excluded} of {} paths excluded", scheme.n_paths);
    }
    Ok(ens)
}

/// Euler-Maruyama ensemble of the elliptic Bessel process up to `horizon`.
///
/// The drift `-((D - 1)/2) U_1'(t, x)` is frozen at the left end of each
/// step. Steps are halved while `|drift| h > drift_cfl * distance`; for
/// `D >= 2` crossing increments are redrawn, for `D < 2` the path is absorbed
/// at the linearly interpolated crossing time.
pub fn simulate_ebes<T: Real>(cfg: &EBesConfig<T>, scheme: &SchemeConfig<T>, horizon: T) -> Result<PathEnsemble<T>> {
    run_ensemble(&Model::Bessel(cfg), scheme, horizon, false)
}

/// Euler-Maruyama ensemble of the elliptic Dyson model up to `horizon`, with
/// the same sub-stepping and boundary policy applied to every gap and to the
/// center of mass.
pub fn simulate_edys<T: Real>(cfg: &EDysConfig<T>, scheme: &SchemeConfig<T>, horizon: T) -> Result<PathEnsemble<T>> {
    run_ensemble(&Model::Dyson(cfg), scheme, horizon, false)
}

pub fn simulate<T: Real>(process: &ProcessConfig<T>, scheme: &SchemeConfig<T>, horizon: T) -> Result<PathEnsemble<T>> {
    match process {
        ProcessConfig::Bessel(c) => simulate_ebes(c, scheme, horizon),
        ProcessConfig::Dyson(c) => simulate_edys(c, scheme, horizon),
    }
}

/// Brownian paths from the starting point with the Girsanov weight
/// `(ratio)^(power) exp(-int V ds)` of the process at every record time.
///
/// Paths leaving the domain (detected at step ends, and between steps through
/// the Brownian bridge crossing probability when enabled) keep weight zero.
pub fn girsanov_weight_track<T: Real>(
    process: &ProcessConfig<T>,
    scheme: &SchemeConfig<T>,
    horizon: T,
) -> Result<PathEnsemble<T>> {
    let model = match process {
        ProcessConfig::Bessel(c) => Model::Bessel(c),
        ProcessConfig::Dyson(c) => Model::Dyson(c),
    };
    run_ensemble(&model, scheme, horizon, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{u_n_dx, v_n, w_n};
    use std::f64::consts::PI;

    fn scheme(t_star: f64, paths: usize) -> SchemeConfig<f64> {
        SchemeConfig {
            dt: 2e-3 * t_star,
            n_paths: paths,
            seed: 7,
            ..SchemeConfig::for_t_star(t_star)
        }
    }

    #[test]
    fn bessel_drift_vanishes_at_half_period() {
        let cfg = EBesConfig::new(3.0, 1.0, 1.0, PI).unwrap();
        let mut out = [1.0];
        Model::Bessel(&cfg)
            .drift(0.3, &[PI], &mut out, &SeriesPolicy::default())
            .unwrap();
        assert!(out[0].abs() < 1e-13, "{}", out[0]);
    }

    #[test]
    fn dyson_drift_forms_agree_and_pair_terms_cancel() {
        let mut cfg = EDysConfig::new(2.0, 1.0, 1.0, vec![0.4, 1.9, 3.3]).unwrap();
        let p = SeriesPolicy::default();
        let mut rng = path_rng(3, 0);
        for _ in 0..20 {
            let t = rng.random::<f64>() * 0.9;
            let mut x = vec![0.0; 3];
            loop {
                for v in x.iter_mut() {
                    *v = rng.random::<f64>() * 2.0 * PI;
                }
                x.sort_by(f64::total_cmp);
                if cfg.geometry().circle().check_alcove(&x).is_ok() {
                    break;
                }
            }
            let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
            cfg.drift_form = DriftForm::Pairwise;
            Model::Dyson(&cfg).drift(t, &x, &mut a, &p).unwrap();
            cfg.drift_form = DriftForm::ThetaTwo;
            Model::Dyson(&cfg).drift(t, &x, &mut b, &p).unwrap();
            for j in 0..3 {
                assert!((a[j] - b[j]).abs() < 1e-10 * (1.0 + a[j].abs()), "{a:?} vs {b:?}");
            }
            // Pair terms cancel, so the sum is N times the center term.
            let clock = cfg.geometry().clock(t).unwrap();
            let xbar = cfg.geometry().circle().center_of_mass(&x);
            let center = u_n_dx_extended(&clock, 3, xbar, &p).unwrap();
            let total: f64 = a.iter().sum();
            assert!((total + 3.0 * center).abs() < 1e-12 * (1.0 + center.abs()));
        }
    }

    #[test]
    fn weight_factor_is_space_time_harmonic() {
        // (d/dt + (1/2) Laplacian) exp(F) = V exp(F) for the log-factor F.
        let p = SeriesPolicy::default();
        let bessel = EBesConfig::new(1.5, 1.1, 1.3, 2.0).unwrap();
        let dyson = EDysConfig::new(1.0, 1.1, 1.3, vec![0.5, 2.1, 3.6]).unwrap();
        let cases: [(Model<f64>, Vec<f64>); 2] =
            [(Model::Bessel(&bessel), vec![2.6]), (Model::Dyson(&dyson), vec![0.8, 2.3, 4.0])];
        let (t, h) = (0.4, 1e-3);
        for (model, x) in cases {
            let f = |t: f64, x: &[f64]| model.log_ratio_factor(t, x, &p).unwrap().exp();
            let base = f(t, &x);
            let dt = (-f(t + 2.0 * h, &x) + 8.0 * f(t + h, &x) - 8.0 * f(t - h, &x) + f(t - 2.0 * h, &x))
                / (12.0 * h);
            let mut lap = 0.0;
            for j in 0..x.len() {
                let at = |d: f64| {
                    let mut y = x.clone();
                    y[j] += d;
                    f(t, &y)
                };
                lap += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * base + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h);
            }
            let lhs = dt + 0.5 * lap;
            let rhs = model.potential(t, &x, &p).unwrap() * base;
            assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn potentials_match_public_forms() {
        let p = SeriesPolicy::<f64>::default();
        let dyson = EDysConfig::new(0.7f64, 1.0, 1.0, vec![0.5, 2.1, 3.6]).unwrap();
        let clock = dyson.geometry().clock(0.2).unwrap();
        let x = [0.6, 2.0, 3.9];
        let v = Model::Dyson(&dyson).potential(0.2, &x, &p).unwrap();
        assert!((v - v_n(&clock, 0.7, &x, &p).unwrap()).abs() < 1e-14 * (1.0 + v.abs()));
        // exp of the weight factor at beta = 2 is h, and log h = -W for N = 2.
        let two = EDysConfig::new(2.0, 1.0, 1.0, vec![1.0, 4.0]).unwrap();
        let f = Model::Dyson(&two).log_ratio_factor(0.2, &[1.2, 3.5], &p).unwrap();
        assert!((f + w_n(&clock, &[1.2, 3.5], &p).unwrap()).abs() < 1e-12);
        let bessel = EBesConfig::new(3.0, 1.0, 1.0, 2.0).unwrap();
        let mut b = [0.0];
        Model::Bessel(&bessel).drift(0.2, &[2.5], &mut b, &p).unwrap();
        assert!((b[0] + u_n_dx(&clock, 1, 2.5, &p).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn ensembles_are_reproducible_and_thread_independent() {
        let cfg = EDysConfig::new(2.0, 1.0, 1.0, vec![1.0, 3.3]).unwrap();
        let s = scheme(1.0, 64);
        let a = simulate_edys(&cfg, &s, 0.3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_edys(&cfg, &s, 0.3).unwrap());
        assert_eq!(a, b);
        let c = simulate_edys(&cfg, &SchemeConfig { seed: 8, ..s }, 0.3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn states_stay_in_the_domain_and_are_wrapped() {
        let cfg = EDysConfig::new(2.0, 1.0, 1.0, vec![1.0, 3.3]).unwrap();
        let s = SchemeConfig {
            n_records: 3,
            ..scheme(1.0, 200)
        };
        let ens = simulate_edys(&cfg, &s, 0.6).unwrap();
        assert_eq!(ens.times.len(), 4);
        for (i, path) in ens.paths.iter().enumerate() {
            assert!(path.is_included());
            for k in 0..4 {
                let st = ens.state(i, k).unwrap();
                assert!(st.iter().all(|&v| (0.0..2.0 * PI).contains(&v)));
            }
        }
    }

    #[test]
    fn absorbing_bessel_records_hitting_times() {
        let cfg = EBesConfig::new(1.5, 1.0, 1.0, 0.3).unwrap();
        let ens = simulate_ebes(&cfg, &scheme(1.0, 400), 0.5).unwrap();
        let frac = ens.absorbed_fraction();
        assert!(frac.mean > 0.05 && frac.mean < 1.0, "{frac:?}");
        for (i, p) in ens.paths.iter().enumerate() {
            if let Some(t) = p.absorbed {
                assert!(t > 0.0 && t <= 0.5);
                assert!(ens.state(i, 1).is_none());
            }
        }
    }

    #[test]
    fn horizon_and_scheme_validation() {
        let cfg = EBesConfig::new(3.0, 1.0, 1.0, 1.0).unwrap();
        assert!(simulate_ebes(&cfg, &scheme(1.0, 4), 0.99).is_err());
        let bad = SchemeConfig {
            drift_cfl: 1.5,
            ..scheme(1.0, 4)
        };
        assert!(simulate_ebes(&cfg, &bad, 0.5).is_err());
        assert!(EDysConfig::new(2.0, 1.0, 1.0, vec![1.0, 1.0]).is_err());
        assert!(EBesConfig::new(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn weights_start_at_one_and_are_ratios_at_beta_two() {
        let cfg = EDysConfig::new(2.0, 1.0, 1.0, vec![1.0, 3.3]).unwrap();
        let s = SchemeConfig {
            n_records: 2,
            ..scheme(1.0, 50)
        };
        let ens = girsanov_weight_track(&ProcessConfig::Dyson(cfg.clone()), &s, 0.5).unwrap();
        let p = SeriesPolicy::default();
        let g = cfg.geometry();
        let h0 = log_h_n_r(&g.clock(0.0).unwrap(), 2.0, cfg.u(), &p).unwrap().0;
        let mut checked = 0;
        for path in &ens.paths {
            let w = path.weights.as_ref().unwrap();
            assert_eq!(w[0], 1.0);
            assert_eq!(w.len(), 3);
            if path.absorbed.is_none() {
                // |h| is invariant under shifting any coordinate by 2 pi r,
                // so the wrapped state gives the same ratio.
                let y = &path.states[4..6];
                if let Ok((h, _)) = log_h_n_r(&g.clock(0.5).unwrap(), 2.0, y, &p) {
                    let want = (h - h0).exp();
                    assert!((w[2] - want).abs() < 1e-9 * want.max(1.0), "{} vs {want}", w[2]);
                    checked += 1;
                }
            } else {
                assert_eq!(w[2], 0.0);
            }
        }
        assert!(checked > 10);
    }
}
