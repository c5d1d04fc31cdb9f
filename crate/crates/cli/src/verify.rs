//! Identity checks run by `verify`. Each check reports its largest residual
//! against a tolerance that `--tol-scale` multiplies.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use elliptic_dyson::determinantal::{dmr_expectation, mart_vector, martingale_transport_residual, Weight};
use elliptic_dyson::heat_kernels::villat_link_residual;
use elliptic_dyson::potentials::{
    h_n_r_det, h_n_r_product, u_n_dt_finite_difference, u_n_dx, u_n_dxx, v_1, v_1_weierstrass, v_n,
    v_n_weierstrass,
};
use elliptic_dyson::special_functions::{
    forrester_residual, jacobi_imaginary_residual, theta_heat_equation_residual, ModularParam, SeriesPolicy,
    ThetaKind,
};
use elliptic_dyson::{CircleGeom, EllipticGeometry64, PointConfiguration64, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Inputs shared by every check.
pub struct Context {
    pub seed: u64,
    pub samples: usize,
    pub policy: SeriesPolicy<f64>,
}

impl Context {
    /// Independent stream per check, so running a subset leaves values unchanged.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    run: fn(&Context) -> Result<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEntry {
    pub check_id: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    /// `None` when the check raised an error.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// Seconds.
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const CHECKS: [Check; 10] = [
    Check {
        id: "theta_heat_pde",
        description: "theta functions solve the heat equation in tau",
        anchor: "theta-heat-equation",
        tolerance: 1e-7,
        run: theta_heat_pde,
    },
    Check {
        id: "jacobi_imaginary",
        description: "direct series agrees with the imaginary transformation",
        anchor: "jacobi-imaginary-transformation",
        tolerance: 1e-11,
        run: jacobi_imaginary,
    },
    Check {
        id: "theta_determinants",
        description: "theta determinant product identities for N = 2..5",
        anchor: "theta-determinant-identities",
        tolerance: 1e-9,
        run: theta_determinants,
    },
    Check {
        id: "log_potential_pde",
        description: "dU/dt = (N/2)(U'^2 - U'') against a time difference",
        anchor: "log-potential-pde",
        tolerance: 1e-8,
        run: log_potential_pde,
    },
    Check {
        id: "vanishing_potentials",
        description: "V_1 at D = 3 and V_N at beta = 2 vanish",
        anchor: "vanishing-potentials",
        tolerance: 1e-10,
        run: vanishing_potentials,
    },
    Check {
        id: "ground_state_det",
        description: "ground-state product equals the wrapped-kernel determinant",
        anchor: "ground-state-determinant",
        tolerance: 1e-9,
        run: ground_state_det,
    },
    Check {
        id: "biorthogonality",
        description: "martingale functions at time 0 satisfy M_k(u_j) = delta_jk",
        anchor: "martingale-biorthogonality",
        tolerance: 1e-10,
        run: biorthogonality,
    },
    Check {
        id: "martingale_transport",
        description: "heat transport of martingale functions",
        anchor: "martingale-transport",
        tolerance: 1e-7,
        run: martingale_transport,
    },
    Check {
        id: "mdr_consistency",
        description: "determinantal and kernel-ratio weights give equal expectations",
        anchor: "determinantal-martingale-representation",
        tolerance: 1e-6,
        run: mdr_consistency,
    },
    Check {
        id: "villat_link",
        description: "Villat kernel equals the log-derivative of the pinned kernel",
        anchor: "villat-kernel-link",
        tolerance: 1e-8,
        run: villat_link,
    },
];

/// Runs the selected checks in order.
pub fn run(ctx: &Context, selected: &[String], tol_scale: f64) -> Vec<ReportEntry> {
    CHECKS
        .iter()
        .filter(|c| selected.is_empty() || selected.iter().any(|s| s == c.id))
        .map(|c| {
            let start = Instant::now();
            let outcome = (c.run)(ctx);
            let wall_time = start.elapsed().as_secs_f64();
            let tolerance = c.tolerance * tol_scale;
            let (max_residual, error) = match outcome {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let pass = max_residual.is_some_and(|v| v <= tolerance);
            log::info!("{} residual {:?} tolerance {tolerance:e}", c.id, max_residual);
            ReportEntry {
                check_id: c.id,
                description: c.description,
                anchor: c.anchor,
                max_residual,
                tolerance,
                pass,
                wall_time,
                error,
            }
        })
        .collect()
}

fn alcove_point(rng: &mut ChaCha8Rng, circle: &CircleGeom<f64>, n: usize, min_gap: f64) -> Vec<f64> {
    let period = circle.period();
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..period)).collect();
        x.sort_by(f64::total_cmp);
        let gaps_ok = x.windows(2).all(|w| w[1] - w[0] > min_gap) && x[0] + period - x[n - 1] > min_gap;
        if gaps_ok && circle.check_alcove(&x).is_ok() {
            return x;
        }
    }
}

fn theta_heat_pde(ctx: &Context) -> Result<f64> {
    let mut worst = 0.0f64;
    for kind in ThetaKind::ALL {
        for i in 0..10 {
            let tau = ModularParam::imaginary(0.3 + 2.7 * i as f64 / 9.0)?;
            for j in 0..10 {
                let v = Complex64::new(0.05 + 0.1 * j as f64, 0.05);
                worst = worst.max(theta_heat_equation_residual(kind, v, tau, 1e-4, &ctx.policy)?);
            }
        }
    }
    Ok(worst)
}

fn jacobi_imaginary(ctx: &Context) -> Result<f64> {
    let mut rng = ctx.rng(1);
    let mut worst = 0.0f64;
    for i in 0..5 * ctx.samples {
        let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5));
        let tau = ModularParam::new(Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(0.3..3.0)))?;
        worst = worst.max(jacobi_imaginary_residual(ThetaKind::ALL[i % 4], v, tau, &ctx.policy)?.rel);
    }
    Ok(worst)
}

fn theta_determinants(ctx: &Context) -> Result<f64> {
    let mut rng = ctx.rng(2);
    let mut worst = 0.0f64;
    for n in 2..=5 {
        for _ in 0..ctx.samples {
            let tau = ModularParam::new(Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(0.2..0.8)))?;
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random_range(0.0..1.0), rng.random_range(-0.2..0.2)))
                .collect();
            let alpha = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.1..0.1));
            worst = worst.max(forrester_residual(tau, &x, alpha, &ctx.policy)?.rel);
        }
    }
    Ok(worst)
}

fn log_potential_pde(ctx: &Context) -> Result<f64> {
    let geometry = EllipticGeometry64::new(1.0, 1.0)?;
    let mut worst = 0.0f64;
    for n in 1..=5 {
        for t in [0.05, 0.3, 0.55, 0.8] {
            let clock = geometry.clock(t)?;
            for i in 0..8 {
                let x = 0.3 + (TAU - 0.6) * i as f64 / 7.0;
                let dt = u_n_dt_finite_difference(&clock, n, x, 2e-4, &ctx.policy)?;
                let slope = u_n_dx(&clock, n, x, &ctx.policy)?;
                let rhs = 0.5 * n as f64 * (slope * slope - u_n_dxx(&clock, n, x, &ctx.policy)?);
                worst = worst.max((dt - rhs).abs() / rhs.abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

fn vanishing_potentials(ctx: &Context) -> Result<f64> {
    let geometry = EllipticGeometry64::new(1.0, 1.0)?;
    let mut rng = ctx.rng(4);
    let mut worst = 0.0f64;
    for t in [0.0, 0.3, 0.6, 0.9] {
        let clock = geometry.clock(t)?;
        for i in 0..16 {
            let x = 0.2 + (TAU - 0.4) * i as f64 / 15.0;
            worst = worst.max(v_1(&clock, 3.0, x, &ctx.policy)?.abs());
            worst = worst.max(v_1_weierstrass(&clock, 3.0, x, &ctx.policy)?.abs());
        }
        for n in 2..=5 {
            let x = alcove_point(&mut rng, geometry.circle(), n, 0.05);
            worst = worst.max(v_n(&clock, 2.0, &x, &ctx.policy)?.abs());
            worst = worst.max(v_n_weierstrass(&clock, 2.0, &x, &ctx.policy)?.abs());
        }
    }
    Ok(worst)
}

fn ground_state_det(ctx: &Context) -> Result<f64> {
    let geometry = EllipticGeometry64::new(1.0, 1.0)?;
    let mut rng = ctx.rng(5);
    let mut worst = 0.0f64;
    for n in 2..=5 {
        for beta in [1.0, 2.0, 3.0] {
            for _ in 0..ctx.samples.div_ceil(2) {
                let clock = geometry.clock(rng.random_range(0.0..0.9))?;
                let x = alcove_point(&mut rng, geometry.circle(), n, 0.05);
                let a = h_n_r_product(&clock, beta, &x, &ctx.policy)?;
                let b = h_n_r_det(&clock, beta, &x, &ctx.policy)?;
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(worst)
}

fn configuration(points: Vec<f64>, policy: SeriesPolicy<f64>) -> Result<PointConfiguration64> {
    let mut xi = PointConfiguration64::new(points, 1.0, 1.0)?;
    xi.policy = policy;
    Ok(xi)
}

fn biorthogonality(ctx: &Context) -> Result<f64> {
    let mut rng = ctx.rng(6);
    let circle = CircleGeom::new(1.0)?;
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let xi = configuration(alcove_point(&mut rng, &circle, n, 0.2), ctx.policy)?;
        for (j, &u) in xi.points().iter().enumerate() {
            for (k, m) in mart_vector(&xi, 0.0, u)?.into_iter().enumerate() {
                let delta = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((m - delta).abs());
            }
        }
    }
    Ok(worst)
}

fn martingale_transport(ctx: &Context) -> Result<f64> {
    let mut worst = 0.0f64;
    for (points, (s, t, x)) in [(vec![1.0, 3.2], (0.1, 0.5, 2.3)), (vec![0.5, 2.0, 4.4], (0.2, 0.7, 4.0))] {
        let xi = configuration(points, ctx.policy)?;
        worst = worst.max(martingale_transport_residual(&xi, 0, s, t, x)?);
    }
    Ok(worst)
}

fn mdr_consistency(ctx: &Context) -> Result<f64> {
    let xi = configuration(vec![1.0, 3.2], ctx.policy)?;
    let g = |x: &[f64]| (x[1] - x[0]).cos() + 0.5 * (x[0] + x[1] - PI).cos();
    let a = dmr_expectation(&xi, 0.3, &g, Weight::Determinantal)?;
    let b = dmr_expectation(&xi, 0.3, &g, Weight::KernelRatio)?;
    Ok((a - b).abs())
}

fn villat_link(ctx: &Context) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in [0.2, 1.0, 3.0] {
        for k in 1..40 {
            worst = worst.max(villat_link_residual(s, TAU * k as f64 / 40.0, &ctx.policy)?);
        }
    }
    Ok(worst)
}
