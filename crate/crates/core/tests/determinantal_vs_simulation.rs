//! Determinantal formulas against simulated elliptic Dyson ensembles at beta = 2.

use std::f64::consts::{PI, TAU};

use elliptic_dyson::determinantal::{correlation_fn, dmr_expectation, SpaceTimePoint, Weight};
use elliptic_dyson::process_sim::{simulate_edys, Estimate};
use elliptic_dyson::{EDysConfig64, PointConfiguration64, SchemeConfig64};

fn ensemble(points: &[f64], t: f64, paths: usize, seed: u64) -> elliptic_dyson::PathEnsemble64 {
    let cfg = EDysConfig64::new(2.0, 1.0, 1.0, points.to_vec()).unwrap();
    let scheme = SchemeConfig64 {
        dt: 2e-3,
        n_paths: paths,
        seed,
        ..SchemeConfig64::for_t_star(1.0)
    };
    simulate_edys(&cfg, &scheme, t).unwrap()
}

#[test]
fn pair_correlation_matches_binned_pair_counts() {
    const BINS: usize = 4;
    const SUB: usize = 6;
    let points = [1.0, TAU - 1.0];
    let t = 0.3;
    let xi = PointConfiguration64::new(points.to_vec(), 1.0, 1.0).unwrap();
    let width = TAU / BINS as f64;
    let mids: Vec<f64> = (0..BINS * SUB).map(|i| (i as f64 + 0.5) * width / SUB as f64).collect();
    let cell = width / SUB as f64;
    let mut rho2 = [[0.0f64; BINS]; BINS];
    for (i, &x) in mids.iter().enumerate() {
        for (j, &y) in mids.iter().enumerate() {
            let group = [SpaceTimePoint::new(t, x), SpaceTimePoint::new(t, y)];
            rho2[i / SUB][j / SUB] += correlation_fn(&xi, &[&group]).unwrap() * cell * cell;
        }
    }
    let ens = ensemble(&points, t, 20_000, 21);
    let bin = |x: f64| ((x / width) as usize).min(BINS - 1);
    let mut worst = 0.0f64;
    for (a, row) in rho2.iter().enumerate() {
        for (b, &expected) in row.iter().enumerate() {
            let counts = ens.samples(1, |s| {
                let (p, q) = (bin(s[0]), bin(s[1]));
                f64::from(u8::from(p == a && q == b)) + f64::from(u8::from(q == a && p == b))
            });
            let mc = Estimate::from_samples(counts);
            let z = (mc.mean - expected).abs() / mc.se.max(1e-4);
            worst = worst.max(z);
        }
    }
    assert!(worst < 4.0, "largest cell deviation {worst} standard errors");
    let total: f64 = rho2.iter().flatten().sum();
    assert!((total - 2.0).abs() < 1e-3, "pairs integrate to N(N-1): {total}");
}

#[test]
fn martingale_representation_matches_simulation() {
    let points = [0.8, 3.0];
    let t = 0.6;
    let xi = PointConfiguration64::new(points.to_vec(), 1.0, 1.0).unwrap();
    let g = |x: &[f64]| (2.0 * (x[1] - x[0])).cos() - 0.3 * (x[0] + x[1] - PI).cos();
    let determinantal = dmr_expectation(&xi, t, &g, Weight::Determinantal).unwrap();
    let kernel_ratio = dmr_expectation(&xi, t, &g, Weight::KernelRatio).unwrap();
    assert!((determinantal - kernel_ratio).abs() < 1e-6, "{determinantal} {kernel_ratio}");
    let mc = ensemble(&points, t, 20_000, 22).estimate(1, g);
    let z = (mc.mean - determinantal).abs() / mc.se;
    assert!(z < 4.0, "quadrature {determinantal}, simulation {} +- {}", mc.mean, mc.se);
}
