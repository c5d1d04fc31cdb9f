//! `simulate`, `kernel`, `density` and `pinned`: parameter validation,
//! computation and CSV output.

use std::path::Path;

use elliptic_dyson::determinantal::{kernel_grid, one_point_density};
use elliptic_dyson::process_sim::{
    pinned_expectation_ebes3, simulate, simulate_ebes, simulate_edys, Estimate, ProcessConfig,
};
use elliptic_dyson::special_functions::SeriesPolicy;
use elliptic_dyson::{EBesConfig64, EDysConfig64, PointConfiguration64};
use serde_json::json;

use crate::config::{DensityConfig, KernelConfig, PinnedConfig, ProcessKind, SimulateConfig};
use crate::output::{header, num, Manifest, Table};
use crate::CliError;

fn config_error(e: elliptic_dyson::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn run_error(e: elliptic_dyson::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn estimate_json(e: &Estimate<f64>) -> serde_json::Value {
    json!({ "mean": e.mean, "se": e.se, "count": e.count })
}

pub fn simulate_cmd(cfg: &SimulateConfig, out: &Path) -> Result<Manifest, CliError> {
    let policy = cfg.series.policy();
    let process = match cfg.process {
        ProcessKind::Ebes => {
            let [u] = cfg.u[..] else {
                return Err(CliError::Config("the Bessel process takes exactly one starting point in u".into()));
            };
            ProcessConfig::Bessel(EBesConfig64::new(cfg.d, cfg.r, cfg.t_star, u).map_err(config_error)?)
        }
        ProcessKind::Edys => {
            ProcessConfig::Dyson(EDysConfig64::new(cfg.beta, cfg.r, cfg.t_star, cfg.u.clone()).map_err(config_error)?)
        }
    };
    let scheme = cfg.scheme.scheme(cfg.t_star, policy);
    scheme.validate(process.geometry(), cfg.horizon).map_err(config_error)?;
    let ensemble = simulate(&process, &scheme, cfg.horizon).map_err(run_error)?;

    let n = ensemble.n_particles;
    let mut cells = header(&["path_id", "t"]);
    if n == 1 {
        cells.push("x".into());
    } else {
        cells.extend((1..=n).map(|j| format!("x_{j}")));
    }
    let mut table = Table::create(out, "simulate.csv", &cells)?;
    for path in 0..ensemble.paths.len() {
        for (k, &t) in ensemble.times.iter().enumerate() {
            let Some(state) = ensemble.state(path, k) else { break };
            let mut row = vec![path.to_string(), num(t)];
            row.extend(state.iter().map(|&x| num(x)));
            table.row(&row)?;
        }
    }
    let mut manifest = Manifest::new("simulate", Some(scheme.seed), cfg);
    manifest.outputs.push(table.finish()?);
    manifest.summary = json!({
        "paths": ensemble.paths.len(),
        "included": ensemble.included_count(),
        "absorbed_fraction": estimate_json(&ensemble.absorbed_fraction()),
        "boundary_hit_fraction": estimate_json(&ensemble.boundary_hit_fraction()),
        "rejections": ensemble.total_rejections(),
    });
    Ok(manifest)
}

fn point_configuration(
    points: &[f64],
    r: f64,
    t_star: f64,
    policy: SeriesPolicy<f64>,
) -> Result<PointConfiguration64, CliError> {
    let mut xi = PointConfiguration64::new(points.to_vec(), r, t_star).map_err(config_error)?;
    xi.policy = policy;
    Ok(xi)
}

pub fn kernel_cmd(cfg: &KernelConfig, out: &Path) -> Result<Manifest, CliError> {
    let xi = point_configuration(&cfg.points, cfg.r, cfg.t_star, cfg.series.policy())?;
    if cfg.nodes == 0 || cfg.times.is_empty() {
        return Err(CliError::Config("need at least one time and one node".into()));
    }
    if let Some(t) = cfg.times.iter().find(|&&t| !(t > 0.0 && t < cfg.t_star)) {
        return Err(CliError::Config(format!("time {t} outside (0, t_star)")));
    }
    let grid = kernel_grid(&xi, &cfg.times, cfg.nodes).map_err(run_error)?;
    let mut table = Table::create(out, "kernel.csv", &header(&["s", "x", "t", "y", "K"]))?;
    let n = grid.nodes.len();
    for (i, &s) in grid.times.iter().enumerate() {
        for a in 0..n {
            for (j, &t) in grid.times.iter().enumerate() {
                for b in 0..n {
                    let k = grid.get(i, a, j, b);
                    table.row(&[num(s), num(grid.nodes[a]), num(t), num(grid.nodes[b]), num(k)])?;
                }
            }
        }
    }
    let h = xi.circle().period() / n as f64;
    let traces: Vec<f64> = (0..grid.times.len())
        .map(|i| (0..n).map(|a| grid.get(i, a, i, a)).sum::<f64>() * h)
        .collect();
    let mut manifest = Manifest::new("kernel", None, cfg);
    manifest.outputs.push(table.finish()?);
    manifest.summary = json!({ "equal_time_traces": traces });
    Ok(manifest)
}

pub fn density_cmd(cfg: &DensityConfig, out: &Path) -> Result<Manifest, CliError> {
    let policy = cfg.series.policy();
    let xi = point_configuration(&cfg.points, cfg.r, cfg.t_star, policy)?;
    let process = EDysConfig64::new(2.0, cfg.r, cfg.t_star, cfg.points.clone()).map_err(config_error)?;
    let scheme = cfg.scheme.scheme(cfg.t_star, policy);
    scheme.validate(process.geometry(), cfg.t).map_err(config_error)?;
    if cfg.bins == 0 || cfg.kernel_subnodes == 0 {
        return Err(CliError::Config("bins and kernel_subnodes must be positive".into()));
    }

    let period = xi.circle().period();
    let n = xi.n() as f64;
    let width = period / cfg.bins as f64;
    let sub = cfg.kernel_subnodes;
    let xs: Vec<f64> = (0..cfg.bins * sub).map(|i| (i as f64 + 0.5) * width / sub as f64).collect();
    let rho = one_point_density(&xi, cfg.t, &xs).map_err(run_error)?;

    let ensemble = simulate_edys(&process, &scheme, cfg.t).map_err(run_error)?;
    let last = ensemble.times.len() - 1;
    let bin_of = |x: f64| ((x / width) as usize).min(cfg.bins - 1);
    let states = ensemble.samples(last, |_| 0.0).len();
    let mut per_path = vec![Vec::with_capacity(states); cfg.bins];
    for path in 0..ensemble.paths.len() {
        let Some(state) = ensemble.state(path, last) else { continue };
        if !ensemble.paths[path].is_included() {
            continue;
        }
        let mut counts = vec![0.0; cfg.bins];
        for &x in state {
            counts[bin_of(x)] += 1.0;
        }
        for (b, c) in counts.into_iter().enumerate() {
            per_path[b].push(c / (n * width));
        }
    }

    let mut table = Table::create(
        out,
        "density.csv",
        &header(&["bin_center", "mc_density", "kernel_density", "se"]),
    )?;
    let mut l1 = 0.0;
    for (b, samples) in per_path.into_iter().enumerate() {
        let mc = Estimate::from_samples(samples);
        let kernel = rho[b * sub..(b + 1) * sub].iter().sum::<f64>() / (sub as f64 * n);
        l1 += (mc.mean - kernel).abs() * width;
        table.row(&[num((b as f64 + 0.5) * width), num(mc.mean), num(kernel), num(mc.se)])?;
    }
    log::info!("density L1 distance {l1}");
    let mut manifest = Manifest::new("density", Some(scheme.seed), cfg);
    manifest.outputs.push(table.finish()?);
    manifest.summary = json!({ "l1_distance": l1, "paths": states });
    Ok(manifest)
}

pub fn pinned_cmd(cfg: &PinnedConfig, out: &Path) -> Result<Manifest, CliError> {
    let policy = cfg.series.policy();
    let process = EBesConfig64::new(3.0, cfg.r, cfg.t_star, cfg.u).map_err(config_error)?;
    let scheme = cfg.scheme.scheme(cfg.t_star, policy);
    let with_mc = cfg.scheme.n_paths > 0;
    if with_mc {
        scheme.validate(process.geometry(), cfg.t).map_err(config_error)?;
    } else if !(cfg.t >= 0.0 && cfg.t < cfg.t_star) {
        return Err(CliError::Config(format!("t = {} outside [0, t_star)", cfg.t)));
    }
    let ensemble = if with_mc {
        Some(simulate_ebes(&process, &scheme, cfg.t).map_err(run_error)?)
    } else {
        None
    };
    let mut table = Table::create(
        out,
        "pinned.csv",
        &header(&["observable", "quadrature", "mc_mean", "mc_se", "z"]),
    )?;
    let mut worst_z = 0.0f64;
    for &k in &cfg.harmonics {
        let g = |x: f64| (k as f64 * x / cfg.r).cos();
        let exact = pinned_expectation_ebes3(&process, cfg.t, &g, &policy).map_err(run_error)?;
        let mut row = vec![format!("cos({k} x / r)"), num(exact)];
        match &ensemble {
            Some(e) => {
                let mc = e.estimate(e.times.len() - 1, |x| g(x[0]));
                let z = (mc.mean - exact).abs() / mc.se;
                worst_z = worst_z.max(z);
                row.extend([num(mc.mean), num(mc.se), num(z)]);
            }
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        table.row(&row)?;
    }
    let mut manifest = Manifest::new("pinned", with_mc.then_some(scheme.seed), cfg);
    manifest.outputs.push(table.finish()?);
    manifest.summary = json!({ "max_z": with_mc.then_some(worst_z) });
    Ok(manifest)
}
