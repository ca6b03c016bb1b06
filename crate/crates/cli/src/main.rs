mod config;
mod csv_io;
mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bgk_core::material::EV;
use bgk_core::{
    run, run_validation, solve_mu, BgkError, DistributionField, KernelContext, MuSolveOptions, OracleConfig, Record,
    RunStatus,
};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::csv_io::num;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "bgk", version, about = "BGK relaxation solver for carriers in graphene")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time-dependent simulation and write its trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the final distribution.
        #[arg(long)]
        final_dist: Option<PathBuf>,
    },
    /// Solve the mass constraint for the chemical potential of a distribution.
    MuSolve {
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        dist: PathBuf,
    },
    /// Tabulate the collision kernels on a uniform energy grid.
    Tabulate {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Chemical potential, eV.
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        /// Upper end of the energy range, eV.
        #[arg(long)]
        eps_max: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the closed-form kernels against reference computations.
    Validate {
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BGK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BGK_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn context(params: Option<&Path>) -> Result<KernelContext, CliError> {
    let p = config::load_params(params)?;
    KernelContext::from_params(p).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct SummaryJson {
    status: &'static str,
    error: Option<String>,
    steps: usize,
    t_final: f64,
    #[serde(rename = "final_mu_eV")]
    final_mu_ev: f64,
    initial_density: f64,
    final_density: f64,
    relative_drift: f64,
    max_step_drift: f64,
    max_kappa_dt: f64,
    max_shift_cells: f64,
    wall_time_s: f64,
}

const TRAJECTORY_HEADER: &str = "t,mu_eV,density_raw,density_phys,energy_density,jx,jy,min_f,max_f,mass_residual";

fn write_record<W: Write>(out: &mut W, r: &Record) -> std::io::Result<()> {
    let o = &r.observables;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        num(r.t),
        num(r.mu / EV),
        num(o.density),
        num(o.density_phys),
        num(o.energy_density),
        num(o.current[0]),
        num(o.current[1]),
        num(r.min_f),
        num(r.max_f),
        num(r.mass_residual)
    )
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.json"))
}

fn simulate(config_path: &Path, out: &Path, final_dist: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let resolved = config::parse(&text)?.resolve(config_path)?;
    let cfg = &resolved.run;

    let started = Instant::now();
    let mut writer = BufWriter::new(File::create(out)?);
    writeln!(writer, "{TRAJECTORY_HEADER}")?;
    let outcome = run(cfg, &resolved.ctx, |r| {
        write_record(&mut writer, r).map_err(BgkError::from)
    });
    writer.flush()?;
    drop(writer);
    let summary = outcome.map_err(|e| CliError::Runtime(e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    let (status, error) = match &summary.status {
        RunStatus::Completed => ("completed", None),
        RunStatus::Failed(msg) => ("failed", Some(msg.clone())),
    };
    let json = SummaryJson {
        status,
        error: error.clone(),
        steps: summary.steps,
        t_final: summary.final_state.t,
        final_mu_ev: summary.final_state.mu / EV,
        initial_density: summary.initial_density,
        final_density: summary.final_density,
        relative_drift: summary.total_drift(),
        max_step_drift: summary.max_step_drift,
        max_kappa_dt: summary.max_kappa_dt,
        max_shift_cells: summary.max_shift_cells,
        wall_time_s: wall,
    };
    let body = serde_json::to_string_pretty(&json).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(summary_path(out), body + "\n")?;

    if let Some(path) = final_dist {
        let mut w = BufWriter::new(File::create(path)?);
        csv_io::write_distribution(&mut w, &cfg.grid, &summary.final_state.f)?;
        w.flush()?;
    }
    if summary.max_kappa_dt > 10.0 {
        log::warn!(
            "max kappa*dt = {:.3e}; relaxation is resolved only in the stiff limit",
            summary.max_kappa_dt
        );
    }
    match error {
        Some(msg) => Err(CliError::Runtime(format!("step {} failed: {msg}", summary.steps + 1))),
        None => Ok(()),
    }
}

fn mu_solve(params: Option<&Path>, dist: &Path) -> Result<(), CliError> {
    let ctx = context(params)?;
    let raw = csv_io::read_distribution(dist)?;
    let f = DistributionField::on_grid(&raw.grid, raw.values).map_err(|e| match e {
        BgkError::OccupancyOutOfRange { .. } => CliError::Occupancy(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let report = solve_mu(&f, &ctx, &raw.grid, &MuSolveOptions::default()).map_err(|e| match e {
        BgkError::BracketFailure { .. } => CliError::NoRoot(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    println!("mu_eV {:.11e}", report.mu / EV);
    println!("scaled_residual {:e}", report.scaled_residual());
    println!("iterations {}", report.iterations);
    Ok(())
}

fn tabulate(params: Option<&Path>, mu_ev: f64, eps_max_ev: f64, n: usize, out: &Path) -> Result<(), CliError> {
    if n < 2 {
        return Err(CliError::Input(format!("--n must be >= 2, got {n}")));
    }
    if !(eps_max_ev.is_finite() && eps_max_ev > 0.0) {
        return Err(CliError::Input(format!(
            "--eps-max must be finite and > 0, got {eps_max_ev}"
        )));
    }
    if !mu_ev.is_finite() {
        return Err(CliError::Input("--mu must be finite".into()));
    }
    let ctx = context(params)?;
    let mu = mu_ev * EV;
    let step = eps_max_ev * EV / (n - 1) as f64;
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "eps_eV,phi0,phi1,kappa,F")?;
    for i in 0..n {
        let eps = if i == n - 1 { eps_max_ev * EV } else { i as f64 * step };
        let runtime = |e: BgkError| CliError::Runtime(e.to_string());
        let phi0 = ctx.phi0(eps, mu).map_err(runtime)?;
        let phi1 = ctx.phi1(eps, mu).map_err(runtime)?;
        let kappa = ctx.kappa(eps, mu).map_err(runtime)?;
        let f = ctx.equilibrium(eps, mu);
        writeln!(
            w,
            "{},{},{},{},{}",
            num(eps / EV),
            num(phi0),
            num(phi1),
            num(kappa),
            num(f)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn validate(params: Option<&Path>) -> Result<(), CliError> {
    let ctx = context(params)?;
    let report = run_validation(&ctx, &OracleConfig::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
    print!("{}", report.to_csv());
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate {
            config,
            out,
            final_dist,
        } => simulate(&config, &out, final_dist.as_deref()),
        Command::MuSolve { params, dist } => mu_solve(params.as_deref(), &dist),
        Command::Tabulate {
            params,
            mu,
            eps_max,
            n,
            out,
        } => tabulate(params.as_deref(), mu, eps_max, n, &out),
        Command::Validate { params } => validate(params.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
