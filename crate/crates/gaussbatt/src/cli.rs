//! Command-line front-end: config ingestion, the experiment drivers
//! (evolve, grid, compare, scaling, oracle-check) and CSV/JSON emission.
//!
//! Exit codes: 0 ok, 2 validation error, 3 numerical failure, 4 oracle
//! tolerance breach. All emitted files are UTF-8, newline-terminated,
//! comma-separated with '.' decimals; floats carry 9 significant digits.
//! Runs are seedless and fully deterministic: re-running a command with
//! identical inputs reproduces files byte for byte. The environment
//! variable GAUSSBATT_THREADS caps the worker count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath_oracle::{
    evolve_moments, evolve_moments_dense, BathDiscretization, OracleOptions,
};
use crate::config::SystemConfig;
use crate::covariance::{Engine, QuadConfig};
use crate::diagnostics::{snapshot, Diagnostics};
use crate::energetics::{energy, find_t_star};
use crate::error::{Error, Result};
use crate::quad::QuadSettings;
use crate::thermo::{crossover_boundary, switching_work};

/// Exact CSV header of a diagnostics row.
pub const CSV_HEADER: &str = "t,t_over_tau,E_B,E_BM,E_BM_prime,ergotropy_glob,ergotropy_loc,\
ratio_R,eta_glob,eta_th,exergy,lambda_plus,lambda_minus,r,phi,nu1,nu_pt_minus,log_neg,\
B_cl,B_en,regime,W,delta_S,sigma_irr,warnings";

/// One axis of a (T, T0) sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config(format!("sweep axis {name}: steps must be >= 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::Config(format!(
                "sweep axis {name}: need finite min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Sweep block of the config document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Number of evolve samples on [0, horizon].
    pub t_points: Option<usize>,
    /// Evolve/search horizon in units of tau.
    pub horizon_tau: Option<f64>,
    #[serde(rename = "T")]
    pub t_axis: Option<AxisSpec>,
    #[serde(rename = "T0")]
    pub t0_axis: Option<AxisSpec>,
    pub n_list: Option<Vec<usize>>,
}

/// Flat quadrature overrides in the config document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadDoc {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_intervals: Option<usize>,
    pub omega_max_factor: Option<f64>,
    pub tail_factor: Option<f64>,
}

impl QuadDoc {
    fn to_config(&self) -> QuadConfig {
        let d = QuadConfig::default();
        QuadConfig {
            settings: QuadSettings {
                rel_tol: self.rel_tol.unwrap_or(d.settings.rel_tol),
                abs_tol: self.abs_tol.unwrap_or(d.settings.abs_tol),
                max_intervals: self.max_intervals.unwrap_or(d.settings.max_intervals),
            },
            omega_max_factor: self.omega_max_factor.unwrap_or(d.omega_max_factor),
            tail_factor: self.tail_factor.unwrap_or(d.tail_factor),
        }
    }
}

/// Complete run specification: one JSON document plus flag overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(flatten)]
    pub system: SystemConfig,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub quad: QuadDoc,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let spec: RunSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.system.validate()?;
        Ok(spec)
    }

    fn engine(&self) -> Result<Engine> {
        Engine::with_quad(self.system.clone(), self.quad.to_config())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gaussbatt",
    about = "Gaussian quantum-battery simulator: exact bright-mode dynamics and diagnostics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time series of every diagnostic on [0, horizon].
    Evolve(EvolveArgs),
    /// (T, T0) sweep at the per-point optimal charging time.
    Grid(GridArgs),
    /// Matched-energy comparison of two configurations.
    Compare(CompareArgs),
    /// E_B(t*) and charging-power scaling over a list of N.
    Scaling(ScalingArgs),
    /// Analytic engine versus the discrete-bath oracle.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run specification.
    #[arg(long)]
    config: PathBuf,
    /// Output path (overrides the config's `output`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Reservoir temperature override.
    #[arg(long, value_name = "T")]
    temp_reservoir: Option<f64>,
    /// Battery temperature override.
    #[arg(long, value_name = "T0")]
    temp_battery: Option<f64>,
}

impl CommonArgs {
    fn spec(&self) -> Result<RunSpec> {
        let mut spec = RunSpec::from_path(&self.config)?;
        if let Some(t) = self.temp_reservoir {
            spec.system.temp_reservoir = t;
        }
        if let Some(t0) = self.temp_battery {
            spec.system.temp_battery = t0;
        }
        if let Some(out) = &self.output {
            spec.output = Some(out.clone());
        }
        spec.system.validate()?;
        Ok(spec)
    }

    fn output_path(&self, spec: &RunSpec, default_name: &str) -> PathBuf {
        spec.output.clone().unwrap_or_else(|| PathBuf::from(default_name))
    }
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of samples (overrides sweep.t_points, default 400).
    #[arg(long)]
    points: Option<usize>,
    /// Horizon in units of tau (overrides sweep.horizon_tau, default 2).
    #[arg(long)]
    horizon_tau: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reuse the t* found at T = T0 = 0.5 across the grid instead of
    /// re-optimizing per point (fast mode).
    #[arg(long)]
    shared_tstar: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Second configuration file; must share N, alphas, T, T0.
    #[arg(long)]
    config_b: Option<PathBuf>,
    /// Damping strength of configuration B (with --omega-d-b).
    #[arg(long)]
    gamma0_b: Option<f64>,
    /// Drude cutoff of configuration B (with --gamma0-b).
    #[arg(long)]
    omega_d_b: Option<f64>,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated list of cell counts, e.g. 6,12,18.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Optional single configuration; default runs the built-in matrix of
    /// five parameter sets.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bath modes (0 = automatic resolution).
    #[arg(long, default_value_t = 0)]
    modes: usize,
    /// Bath cutoff (0 = automatic).
    #[arg(long, default_value_t = 0.0)]
    omega_max: f64,
    /// Comparison times in units of tau.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 1.5])]
    times: Vec<f64>,
    /// Drop the interaction counter-term (deliberate failure mode).
    #[arg(long)]
    drop_counter_term: bool,
    /// Also run the dense small-M path and check dark-mode frozenness.
    #[arg(long)]
    dense: bool,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("GAUSSBATT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Evolve(args) => cmd_evolve(&args).map(|_| 0),
        Command::Grid(args) => cmd_grid(&args).map(|_| 0),
        Command::Compare(args) => cmd_compare(&args).map(|_| 0),
        Command::Scaling(args) => cmd_scaling(&args).map(|_| 0),
        Command::OracleCheck(args) => cmd_oracle_check(&args),
    }
}

/// 9 significant digits; NaN prints as NaN.
fn fmt(v: f64) -> String {
    format!("{v:.8e}")
}

fn diagnostics_row(d: &Diagnostics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt(d.t),
        fmt(d.t_over_tau),
        fmt(d.e_b),
        fmt(d.e_bm),
        fmt(d.e_bm_prime),
        fmt(d.ergotropy_glob),
        fmt(d.ergotropy_loc),
        fmt(d.ratio_r),
        fmt(d.eta_glob),
        fmt(d.eta_th),
        fmt(d.exergy),
        fmt(d.lambda_plus),
        fmt(d.lambda_minus),
        fmt(d.r),
        fmt(d.phi),
        fmt(d.nu1),
        fmt(d.nu_pt_minus),
        fmt(d.log_neg),
        fmt(d.b_cl),
        fmt(d.b_en),
        d.regime.as_str(),
        fmt(d.w),
        fmt(d.delta_s),
        fmt(d.sigma_irr),
        d.warnings.tokens()
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn cmd_evolve(args: &EvolveArgs) -> Result<()> {
    let spec = args.common.spec()?;
    let points = args.points.or(spec.sweep.t_points).unwrap_or(400);
    if points == 0 {
        return Err(Error::Config("evolve: t grid must contain at least one point".into()));
    }
    let horizon_tau = args.horizon_tau.or(spec.sweep.horizon_tau).unwrap_or(2.0);
    if !(horizon_tau.is_finite() && horizon_tau > 0.0) {
        return Err(Error::Config(format!("evolve: invalid horizon {horizon_tau} tau")));
    }
    let engine = spec.engine()?;
    let tau = engine.constants().tau;
    let grid: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|i| horizon_tau * tau * i as f64 / (points - 1) as f64)
            .collect()
    };
    let rows: Result<Vec<Diagnostics>> =
        grid.par_iter().map(|&t| snapshot(&engine, t)).collect();
    let rows = rows?;

    let mut out = String::with_capacity(rows.len() * 400);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for d in &rows {
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    write_file(&args.common.output_path(&spec, "evolve.csv"), &out)
}

/// Evaluate one grid point: fresh engine at (T, T0), optimal (or shared)
/// charging time, then a full snapshot there.
fn grid_point(
    base: &SystemConfig,
    quad: &QuadConfig,
    t_res: f64,
    t0: f64,
    horizon_tau: f64,
    shared_tstar: Option<f64>,
) -> Result<(f64, Diagnostics)> {
    let mut cfg = base.clone();
    cfg.temp_reservoir = t_res;
    cfg.temp_battery = t0;
    let engine = Engine::with_quad(cfg, *quad)?;
    let t_star = match shared_tstar {
        Some(ts) => ts,
        None => find_t_star(&engine, horizon_tau * engine.constants().tau)?,
    };
    Ok((t_star, snapshot(&engine, t_star)?))
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    let spec = args.common.spec()?;
    let t_axis = spec
        .sweep
        .t_axis
        .ok_or_else(|| Error::Config("grid: sweep.T axis is required".into()))?;
    let t0_axis = spec
        .sweep
        .t0_axis
        .ok_or_else(|| Error::Config("grid: sweep.T0 axis is required".into()))?;
    t_axis.validate("T")?;
    t0_axis.validate("T0")?;
    let horizon_tau = spec.sweep.horizon_tau.unwrap_or(2.0);
    let quad = spec.quad.to_config();

    let shared = if args.shared_tstar {
        let mut cfg = spec.system.clone();
        cfg.temp_reservoir = 0.5;
        cfg.temp_battery = 0.5;
        let engine = Engine::with_quad(cfg, quad)?;
        Some(find_t_star(&engine, horizon_tau * engine.constants().tau)?)
    } else {
        None
    };

    let t_values = t_axis.values();
    let t0_values = t0_axis.values();
    let mut jobs = Vec::new();
    for &t0 in &t0_values {
        for &t in &t_values {
            jobs.push((t, t0));
        }
    }
    let results: Result<Vec<(f64, Diagnostics)>> = jobs
        .par_iter()
        .map(|&(t, t0)| grid_point(&spec.system, &quad, t, t0, horizon_tau, shared))
        .collect();
    let results = results?;

    let mut out = String::with_capacity(results.len() * 420);
    out.push_str("T,T0,t_star,");
    out.push_str(CSV_HEADER);
    out.push('\n');
    for ((t, t0), (t_star, d)) in jobs.iter().zip(&results) {
        out.push_str(&format!("{},{},{},", fmt(*t), fmt(*t0), fmt(*t_star)));
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    let output = args.common.output_path(&spec, "grid.csv");
    write_file(&output, &out)?;

    let dir = output.parent().map(Path::to_path_buf).unwrap_or_default();
    write_contours(&spec, &quad, horizon_tau, shared, &jobs, &results, &t_values, &t0_values, &dir)
}

/// Companion boundary files: the lambda_- = 1/2 and nu_PT = 1/2 crossings
/// located by bisection along rows of constant T0, and the analytic
/// T = T* curve.
#[allow(clippy::too_many_arguments)]
fn write_contours(
    spec: &RunSpec,
    quad: &QuadConfig,
    horizon_tau: f64,
    shared: Option<f64>,
    jobs: &[(f64, f64)],
    results: &[(f64, Diagnostics)],
    t_values: &[f64],
    t0_values: &[f64],
    dir: &Path,
) -> Result<()> {
    let value_at = |t: f64, t0: f64| -> Result<(f64, f64)> {
        let (_, d) = grid_point(&spec.system, quad, t, t0, horizon_tau, shared)?;
        Ok((d.lambda_minus, d.nu_pt_minus))
    };

    let mut lambda_pts: Vec<(f64, f64)> = Vec::new();
    let mut nupt_pts: Vec<(f64, f64)> = Vec::new();
    for (row, &t0) in t0_values.iter().enumerate() {
        for col in 0..t_values.len().saturating_sub(1) {
            let idx = row * t_values.len() + col;
            let (lam_a, nupt_a) =
                (results[idx].1.lambda_minus, results[idx].1.nu_pt_minus);
            let (lam_b, nupt_b) =
                (results[idx + 1].1.lambda_minus, results[idx + 1].1.nu_pt_minus);
            debug_assert_eq!(jobs[idx].1, t0);
            if (lam_a - 0.5) * (lam_b - 0.5) < 0.0 {
                let t = bisect_crossing(jobs[idx].0, jobs[idx + 1].0, |t| {
                    value_at(t, t0).map(|(lam, _)| lam - 0.5)
                })?;
                lambda_pts.push((t, t0));
            }
            if nupt_a.is_finite()
                && nupt_b.is_finite()
                && (nupt_a - 0.5) * (nupt_b - 0.5) < 0.0
            {
                let t = bisect_crossing(jobs[idx].0, jobs[idx + 1].0, |t| {
                    value_at(t, t0).map(|(_, nupt)| nupt - 0.5)
                })?;
                nupt_pts.push((t, t0));
            }
        }
    }

    let render = |points: &[(f64, f64)]| {
        let mut s = String::from("T,T0\n");
        for &(t, t0) in points {
            s.push_str(&format!("{},{}\n", fmt(t), fmt(t0)));
        }
        s
    };
    write_file(&dir.join("lambda_half_contour.csv"), &render(&lambda_pts))?;
    write_file(&dir.join("nupt_half_contour.csv"), &render(&nupt_pts))?;

    // T = T* is analytic: Omega_N sqrt(coth(1/(2 T0)) / 2) per T0 value.
    let engine = Engine::with_quad(spec.system.clone(), *quad)?;
    let mut s = String::from("T0,T\n");
    for &t0 in t0_values {
        s.push_str(&format!("{},{}\n", fmt(t0), fmt(crossover_boundary(engine.constants(), t0))));
    }
    write_file(&dir.join("tstar_boundary.csv"), &s)
}

fn bisect_crossing(mut a: f64, mut b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut fa = f(a)?;
    for _ in 0..30 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid)?;
        if (fa > 0.0) == (fm > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Serialize)]
struct CompareSide {
    gamma0: f64,
    omega_d: f64,
    t_star: f64,
    e_b: f64,
    e_bm_prime: f64,
    eta_glob: f64,
    eta_th: f64,
    lambda_minus: f64,
    log_neg: f64,
    regime: &'static str,
    b_cl: f64,
    b_en: f64,
    warnings: String,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    shared: SharedBlock,
    config_a: CompareSide,
    config_b: CompareSide,
    e_b_match: MatchBlock,
    verdict: &'static str,
}

#[derive(Debug, Serialize)]
struct SharedBlock {
    n_cells: usize,
    #[serde(rename = "T")]
    temp_reservoir: f64,
    #[serde(rename = "T0")]
    temp_battery: f64,
    alphas: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct MatchBlock {
    rel_difference: f64,
    fair_comparison: bool,
}

fn compare_side(spec: &RunSpec) -> Result<CompareSide> {
    let engine = spec.engine()?;
    let horizon = spec.sweep.horizon_tau.unwrap_or(2.0) * engine.constants().tau;
    let t_star = find_t_star(&engine, horizon)?;
    let d = snapshot(&engine, t_star)?;
    Ok(CompareSide {
        gamma0: spec.system.gamma0,
        omega_d: spec.system.omega_d,
        t_star,
        e_b: d.e_b,
        e_bm_prime: d.e_bm_prime,
        eta_glob: d.eta_glob,
        eta_th: d.eta_th,
        lambda_minus: d.lambda_minus,
        log_neg: d.log_neg,
        regime: d.regime.as_str(),
        b_cl: d.b_cl,
        b_en: d.b_en,
        warnings: d.warnings.tokens(),
    })
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let spec_a = args.common.spec()?;
    let spec_b = match (&args.config_b, args.gamma0_b, args.omega_d_b) {
        (Some(path), None, None) => {
            let mut b = RunSpec::from_path(path)?;
            if let Some(t) = args.common.temp_reservoir {
                b.system.temp_reservoir = t;
            }
            if let Some(t0) = args.common.temp_battery {
                b.system.temp_battery = t0;
            }
            b
        }
        (None, Some(g0), Some(wd)) => {
            let mut b = spec_a.clone();
            b.system.gamma0 = g0;
            b.system.omega_d = wd;
            b.system.validate()?;
            b
        }
        _ => {
            return Err(Error::Config(
                "compare: provide either --config-b or both --gamma0-b and --omega-d-b".into(),
            ))
        }
    };

    // The matched-energy protocol fixes everything except the reservoir
    // coupling knobs.
    if spec_a.system.n_cells != spec_b.system.n_cells
        || spec_a.system.temp_reservoir != spec_b.system.temp_reservoir
        || spec_a.system.temp_battery != spec_b.system.temp_battery
        || spec_a.system.alpha_values() != spec_b.system.alpha_values()
    {
        return Err(Error::Config(
            "compare: configurations must share N, alphas, T and T0".into(),
        ));
    }

    let side_a = compare_side(&spec_a)?;
    let side_b = compare_side(&spec_b)?;
    let rel_difference =
        (side_a.e_b - side_b.e_b).abs() / side_a.e_b.abs().max(side_b.e_b.abs()).max(1e-300);
    let verdict = if (side_a.eta_glob - side_b.eta_glob).abs() <= 1e-12 {
        "tie"
    } else if side_b.eta_glob > side_a.eta_glob {
        "b_wins"
    } else {
        "a_wins"
    };
    let report = CompareReport {
        shared: SharedBlock {
            n_cells: spec_a.system.n_cells,
            temp_reservoir: spec_a.system.temp_reservoir,
            temp_battery: spec_a.system.temp_battery,
            alphas: spec_a.system.alpha_values(),
        },
        config_a: side_a,
        config_b: side_b,
        e_b_match: MatchBlock { rel_difference, fair_comparison: rel_difference <= 0.01 },
        verdict,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("serialize: {e}")))?;
    text.push('\n');
    match &spec_a.output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_scaling(args: &ScalingArgs) -> Result<()> {
    let spec = args.common.spec()?;
    let n_list = args
        .n_list
        .clone()
        .or_else(|| spec.sweep.n_list.clone())
        .ok_or_else(|| Error::Config("scaling: provide --n-list or sweep.n_list".into()))?;
    let mut distinct = n_list.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Config(format!(
            "scaling: need at least 3 distinct N values, got {n_list:?}"
        )));
    }
    if matches!(&spec.system.alphas, crate::config::Alphas::List(_)) {
        return Err(Error::Config(
            "scaling: couplings must be \"uniform\" so N can vary".into(),
        ));
    }
    let quad = spec.quad.to_config();
    let horizon_tau = spec.sweep.horizon_tau.unwrap_or(2.0);

    let rows: Result<Vec<(usize, f64, f64, f64)>> = n_list
        .par_iter()
        .map(|&n| {
            let cfg = SystemConfig::uniform(
                n,
                spec.system.gamma0,
                spec.system.omega_d,
                spec.system.temp_reservoir,
                spec.system.temp_battery,
            )?;
            let engine = Engine::with_quad(cfg, quad)?;
            let t_star = find_t_star(&engine, horizon_tau * engine.constants().tau)?;
            let bm = engine.bm_block(t_star)?;
            let e_b = energy(&bm, engine.constants(), n).e_b;
            Ok((n, t_star, e_b, e_b / t_star))
        })
        .collect();
    let rows = rows?;

    let mut out = String::from("N,t_star,E_B,P\n");
    for &(n, t_star, e_b, p) in &rows {
        out.push_str(&format!("{n},{},{},{}\n", fmt(t_star), fmt(e_b), fmt(p)));
    }
    let output = args.common.output_path(&spec, "scaling.csv");
    write_file(&output, &out)?;

    let eb_fit = log_log_fit(rows.iter().map(|r| (r.0 as f64, r.2)).collect());
    let p_fit = log_log_fit(rows.iter().map(|r| (r.0 as f64, r.3)).collect());
    let footer = serde_json::json!({
        "n_values": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        "e_b": { "slope": eb_fit.0, "std_error": eb_fit.1 },
        "power": { "slope": p_fit.0, "std_error": p_fit.1 },
    });
    let footer_path = slopes_path(&output);
    write_file(&footer_path, &format!("{}\n", serde_json::to_string_pretty(&footer).unwrap()))
}

/// `scaling.csv` -> `scaling_slopes.json` next to it.
pub fn slopes_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("scaling");
    output.with_file_name(format!("{stem}_slopes.json"))
}

/// Least-squares slope and its standard error in log-log coordinates.
pub fn log_log_fit(points: Vec<(f64, f64)>) -> (f64, f64) {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let dof = (n - 2.0).max(1.0);
    (slope, (ss_res / dof / sxx).sqrt())
}

/// Built-in verification matrix: parameter spread covering the figure and
/// table regimes plus a non-uniform coupling pattern.
fn oracle_matrix() -> Vec<SystemConfig> {
    vec![
        SystemConfig::uniform(6, 5.0, 2.0, 0.5, 0.5).unwrap(),
        SystemConfig::uniform(6, 5.0, 2.0, 0.01, 0.01).unwrap(),
        SystemConfig::uniform(6, 0.528, 7.344, 0.01, 1.0).unwrap(),
        SystemConfig::uniform(6, 1.571, 0.922, 0.01, 1.0).unwrap(),
        SystemConfig::with_alphas(vec![1.0, 0.5, 1.5, 0.8], 2.0, 3.0, 1.0, 0.3).unwrap(),
    ]
}

fn cmd_oracle_check(args: &OracleArgs) -> Result<i32> {
    let configs = match &args.config {
        Some(path) => vec![RunSpec::from_path(path)?.system],
        None => oracle_matrix(),
    };
    if args.times.is_empty() {
        return Err(Error::Config("oracle-check: need at least one time".into()));
    }

    let opts = OracleOptions {
        include_counter_term: !args.drop_counter_term,
        check_kernel: true,
    };
    let mut all_ok = true;
    println!("set  t/tau   max_rel_dev   balance_resid   drift        verdict");
    for (idx, cfg) in configs.iter().enumerate() {
        let engine = Engine::new(cfg.clone())?;
        let dc = *engine.constants();
        let bath = if args.modes == 0 {
            BathDiscretization::default_for(cfg)
        } else {
            let wmax = if args.omega_max > 0.0 { args.omega_max } else { 40.0 * cfg.omega_d };
            BathDiscretization::new(cfg, args.modes, wmax)
        };
        let mut t_grid: Vec<f64> = vec![0.0];
        t_grid.extend(args.times.iter().map(|f| f * dc.tau));
        let snaps = evolve_moments(cfg, &bath, &t_grid, &opts)?;
        let e_r0 = snaps[0].bath_energy;
        for snap in snaps.iter().skip(1) {
            let bm = engine.bm_block(snap.t)?;
            let sigma = bm.sigma(&dc);
            let mut max_rel: f64 = 0.0;
            for pos in [(0, 0), (0, 1), (1, 1)] {
                let dev = (sigma[pos] - snap.sigma_bm[pos]).abs();
                let tol_floor = snap.sigma_bm[pos].abs().max(1e-5 / 1e-3);
                max_rel = max_rel.max(dev / tol_floor);
            }
            let (w, _) = switching_work(cfg, &dc, &bm);
            let parts = energy(&bm, &dc, cfg.n_cells);
            let delta_e_b = parts.e_bm - 0.5 * dc.c_t0;
            let balance = (snap.bath_energy - e_r0 + delta_e_b - w).abs();
            let balance_tol = (1e-3 * w.abs()).max(1e-4);
            let ok = max_rel <= 1e-3 && balance <= balance_tol;
            all_ok &= ok;
            println!(
                "{idx:>3}  {:>5.2}   {max_rel:11.3e}   {balance:13.3e}   {:9.2e}   {}",
                snap.t / dc.tau,
                snap.energy_drift,
                if ok { "ok" } else { "FAIL" }
            );
        }

        if args.dense {
            let dense_bath = BathDiscretization::new(cfg, 400, 40.0 * cfg.omega_d);
            let dense = evolve_moments_dense(cfg, &dense_bath, &t_grid, &opts)?;
            let worst_dm = dense
                .iter()
                .map(|d| d.dm_deviation)
                .fold(0.0_f64, f64::max);
            let ok = worst_dm <= 1e-3;
            all_ok &= ok;
            println!(
                "{idx:>3}  dense dark-mode deviation {worst_dm:.3e}   {}",
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    if all_ok {
        println!("oracle-check: PASS");
        Ok(0)
    } else {
        println!("oracle-check: FAIL");
        Ok(4)
    }
}
