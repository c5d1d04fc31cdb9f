//! Command-line front end: verification suite, simulation, kernel tables,
//! density comparison and pinned expectations.
//!
//! Exit codes: 0 success, 1 a check or computation failed, 2 invalid
//! configuration or arguments.

mod config;
mod drivers;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load, ReportFormat, VerifyConfig};
use output::{header, io_error, num, Manifest, Table};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    /// Failure after the configuration was accepted.
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "ConfigInvalid: {m}"),
            CliError::Run(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "elliptic-dyson", version, about = "Elliptic Bessel and Dyson processes on a circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Multiplies every verification tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the identity checks and write a report.
    Verify,
    /// Simulate an elliptic Bessel or Dyson ensemble.
    Simulate,
    /// Tabulate the correlation kernel on a space-time grid.
    Kernel,
    /// Compare the simulated one-point density with the kernel diagonal.
    Density,
    /// Pinned-quadrature expectations of the three-dimensional Bessel process.
    Pinned,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ELLIPTIC_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(all_pass) => ExitCode::from(u8::from(!all_pass)),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Returns whether every check passed.
fn run(cli: &Cli) -> Result<bool, CliError> {
    if !(cli.tol_scale > 0.0 && cli.tol_scale.is_finite()) {
        return Err(CliError::Config(format!("--tol-scale must be positive, got {}", cli.tol_scale)));
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    let config = cli.config.as_deref();
    let out = cli.out.as_path();
    // Parse before touching the output directory.
    let manifest = match cli.command {
        Command::Verify => {
            let mut cfg: VerifyConfig = load(config)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            create_dir(out)?;
            return run_verify(&cfg, cli.tol_scale, out);
        }
        Command::Simulate => {
            let mut cfg: config::SimulateConfig = load(config)?;
            cfg.scheme.seed = cli.seed.unwrap_or(cfg.scheme.seed);
            create_dir(out)?;
            drivers::simulate_cmd(&cfg, out)?
        }
        Command::Kernel => {
            let cfg: config::KernelConfig = load(config)?;
            create_dir(out)?;
            drivers::kernel_cmd(&cfg, out)?
        }
        Command::Density => {
            let mut cfg: config::DensityConfig = load(config)?;
            cfg.scheme.seed = cli.seed.unwrap_or(cfg.scheme.seed);
            create_dir(out)?;
            drivers::density_cmd(&cfg, out)?
        }
        Command::Pinned => {
            let mut cfg: config::PinnedConfig = load(config)?;
            cfg.scheme.seed = cli.seed.unwrap_or(cfg.scheme.seed);
            create_dir(out)?;
            drivers::pinned_cmd(&cfg, out)?
        }
    };
    let path = manifest.write(out)?;
    println!("wrote {} and {}", manifest.outputs.join(", "), path.display());
    if !manifest.summary.is_null() {
        println!("summary {}", manifest.summary);
    }
    Ok(true)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn run_verify(cfg: &VerifyConfig, tol_scale: f64, out: &Path) -> Result<bool, CliError> {
    if let Some(unknown) = cfg.checks.iter().find(|id| !verify::CHECKS.iter().any(|c| c.id == id.as_str())) {
        return Err(CliError::Config(format!("unknown check id {unknown}")));
    }
    let ctx = verify::Context {
        seed: cfg.seed,
        samples: cfg.samples.max(1),
        policy: cfg.series.policy(),
    };
    let entries = verify::run(&ctx, &cfg.checks, tol_scale);
    for e in &entries {
        let value = e.max_residual.map_or_else(|| e.error.clone().unwrap_or_default(), |v| format!("{v:.3e}"));
        println!(
            "{} {:<22} {value} (tolerance {:.0e}, {:.2} s)",
            if e.pass { "PASS" } else { "FAIL" },
            e.check_id,
            e.tolerance,
            e.wall_time
        );
    }
    let report = match cfg.format {
        ReportFormat::Json => {
            let path = out.join("verify_report.json");
            let mut text = serde_json::to_string_pretty(&entries).map_err(|e| CliError::Run(e.to_string()))?;
            text.push('\n');
            std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
            "verify_report.json".to_string()
        }
        ReportFormat::Csv => {
            let mut table = Table::create(
                out,
                "verify_report.csv",
                &header(&["check_id", "description", "anchor", "max_residual", "tolerance", "pass", "wall_time"]),
            )?;
            for e in &entries {
                table.row(&[
                    e.check_id.to_string(),
                    e.description.to_string(),
                    e.anchor.to_string(),
                    e.max_residual.map(num).unwrap_or_default(),
                    num(e.tolerance),
                    e.pass.to_string(),
                    num(e.wall_time),
                ])?;
            }
            table.finish()?
        }
    };
    let all_pass = entries.iter().all(|e| e.pass);
    let mut manifest = Manifest::new("verify", Some(cfg.seed), cfg);
    manifest.outputs.push(report);
    manifest.summary = serde_json::json!({
        "tol_scale": tol_scale,
        "passed": entries.iter().filter(|e| e.pass).count(),
        "failed": entries.iter().filter(|e| !e.pass).map(|e| e.check_id).collect::<Vec<_>>(),
    });
    manifest.write(out)?;
    println!("verify: {} of {} checks pass", entries.iter().filter(|e| e.pass).count(), entries.len());
    Ok(all_pass)
}
