//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 failed validation
//! (parameter invariants, numerical failures, failed self-checks).

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{calibrate_kappa, REFERENCE_POINTS};
use crate::config::{load_config, Config};
use crate::error::Error;
use crate::optimizer::{max_distance, max_distance_active, optimize, OptResult, TraceRow};
use crate::output::{reports_csv, svg_log_plot, trace_csv, RunManifest, Series};
use crate::params::SourceParams;
use crate::pipeline::{evaluate, BasisAnalysis, EvalOptions, SecrecyReport};
use crate::security::active_baseline_optimal;
use crate::source::{Basis, IntensityClass, SelectionInterval};
use crate::states::{density_matrix, MatrixMode, PhotonDensityMatrix};
use crate::validation::{run_validation, ValidationSettings};

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "FP_QSDC_JOBS";

#[derive(Debug, Parser)]
#[command(
    name = "fpqsdc",
    version,
    about = "Secrecy capacity of QSDC with a fully passive source"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism; FP_QSDC_JOBS overrides).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one operating point.
    Evaluate(EvaluateArgs),
    /// Evaluate or optimise over a range of attenuations.
    Sweep(SweepArgs),
    /// Run the self-check suite.
    Validate(ValidateArgs),
    /// Longest fiber with a positive optimised rate, passive and active.
    Distance(DistanceArgs),
    /// Sensitivity of one operating point to the photon-number cutoff.
    DiagnoseNcut(DiagnoseArgs),
    /// Rank eavesdropper-advantage values against the reference rates.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// JSON config file (see docs/config.md).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximum signal intensity I_s.
    #[arg(long)]
    pub intensity: Option<f64>,
    /// X/Y half-width in radians, or with a `pi` suffix (`0.049pi`).
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub delta_x: Option<f64>,
    /// Z half-width in radians, or with a `pi` suffix.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub delta_z: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<MatrixMode>,
    /// Eavesdropper advantage κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub n_cut: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Total round-trip attenuation in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub attenuation_db: f64,
    /// Output prefix: writes PREFIX.json, PREFIX.csv and a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every density matrix up to n_cut as JSON.
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
    /// Write every decoy linear program in text form.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub from_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub step_db: Option<f64>,
    /// Optimise (I, Δx, Δz) at every attenuation.
    #[arg(long)]
    pub optimize: bool,
    /// CSV output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG plot of the rate with a logarithmic axis.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// CSV of every optimiser evaluation.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Recorded in the run id; the sweep itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2.0)]
    pub attenuation_db: f64,
    /// JSON report file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<MatrixMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub attenuation_db: f64,
    /// Cutoffs to compare.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 7, 10])]
    pub n_cuts: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<MatrixMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses radians, or a multiple of π written `0.05pi` / `0.05π`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        Some(head) => (head.trim().trim_end_matches('*'), PI),
        None => (t, 1.0),
    };
    let v: f64 = if num.is_empty() {
        1.0
    } else {
        num.parse().map_err(|_| format!("not an angle: `{s}`"))?
    };
    Ok(v * scale)
}

fn parse_mode(s: &str) -> Result<MatrixMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let shown: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(cli, shown) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn configure_jobs(flag: Option<usize>) -> CliResult<()> {
    let jobs = match std::env::var(JOBS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("{JOBS_ENV}={v} is not a thread count")))?,
        ),
        _ => flag,
    };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli, args: Vec<String>) -> CliResult<i32> {
    configure_jobs(cli.jobs)?;
    match cli.command {
        Command::Evaluate(a) => cmd_evaluate(a, args),
        Command::Sweep(a) => cmd_sweep(a, args),
        Command::Validate(a) => cmd_validate(a, args),
        Command::Distance(a) => cmd_distance(a, args),
        Command::DiagnoseNcut(a) => cmd_diagnose(a),
        Command::Calibrate(a) => cmd_calibrate(a, args),
    }
}

fn read_config(path: Option<&Path>) -> CliResult<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => load_config(p).map_err(|e| CliError {
            code: 1,
            message: format!("{}: {e}", p.display()),
        }),
    }
}

/// Config with the point flags applied, validated.
fn effective_config(p: &PointArgs) -> CliResult<Config> {
    let mut cfg = read_config(p.config.as_deref())?;
    cfg.source = cfg.source.with_point(p.intensity, p.delta_x, p.delta_z);
    if let Some(m) = p.mode {
        cfg.mode = m;
    }
    if let Some(k) = p.kappa {
        cfg.params.eve_advantage = k;
    }
    if let Some(n) = p.n_cut {
        cfg.params.n_cut = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn options(mode: MatrixMode) -> EvalOptions {
    EvalOptions {
        mode,
        ..Default::default()
    }
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    out.flush().map_err(Error::from)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    run_id: &'a str,
    manifest: Option<PathBuf>,
    #[serde(flatten)]
    body: T,
}

fn finish_manifest(manifest: &RunManifest) -> CliResult<()> {
    if let Some(path) = manifest.finish()? {
        eprintln!("manifest: {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct MatrixDump {
    basis: Basis,
    state: Option<crate::source::State>,
    class: IntensityClass,
    matrices: Vec<PhotonDensityMatrix>,
}

fn dump_matrices(cfg: &Config, source: &SourceParams) -> CliResult<String> {
    let spec = crate::quadrature::QuadratureSpec::default();
    let mut out = Vec::new();
    for basis in Basis::ALL {
        let targets = std::iter::once(None).chain(basis.states().map(Some));
        for state in targets {
            for class in IntensityClass::ALL {
                let iv = match state {
                    Some(st) => SelectionInterval::for_state(source, st, class),
                    None => SelectionInterval::for_basis(source, basis, class),
                };
                let matrices = (0..=cfg.params.n_cut)
                    .map(|n| density_matrix(source, &iv, n, cfg.mode, &spec))
                    .collect::<crate::error::Result<Vec<_>>>()?;
                out.push(MatrixDump {
                    basis,
                    state,
                    class,
                    matrices,
                });
            }
        }
    }
    to_json(&out)
}

fn dump_lps(cfg: &Config, source: &SourceParams, db: f64) -> CliResult<String> {
    let mut text = String::new();
    for basis in Basis::ALL {
        let a = BasisAnalysis::build(&cfg.params, source, basis, db, &options(cfg.mode))?;
        text.push_str(&format!("# basis {}\n", basis.name()));
        text.push_str(&a.yield_lp()?.dump());
        text.push('\n');
        for (lp, (state, _)) in a.error_lps()?.iter().zip(&a.state_ba) {
            text.push_str(&format!("# basis {} state {:?}\n", basis.name(), state));
            text.push_str(&lp.dump());
            text.push('\n');
        }
    }
    Ok(text)
}

fn cmd_evaluate(a: EvaluateArgs, args: Vec<String>) -> CliResult<i32> {
    let cfg = effective_config(&a.point)?;
    let source = cfg.source.resolve();
    let report = evaluate(&cfg.params, &source, a.attenuation_db, &options(cfg.mode))?;
    let canonical = format!("{}\nattenuation_db={}", cfg.to_json(), a.attenuation_db);
    let mut manifest = RunManifest::new("evaluate", args, &canonical, 0);
    let run_id = manifest.run_id.clone();
    match &a.out {
        Some(prefix) => {
            let json_path = with_ext(prefix, "json");
            let tagged = Tagged {
                run_id: &run_id,
                manifest: Some(RunManifest::path_for(&json_path)),
                body: &report,
            };
            manifest.write_output(&json_path, &to_json(&tagged)?)?;
            let csv = reports_csv(&run_id, &[(report.clone(), None)])?;
            manifest.write_output(&with_ext(prefix, "csv"), &csv)?;
        }
        None => {
            let tagged = Tagged {
                run_id: &run_id,
                manifest: None,
                body: &report,
            };
            print_stdout(&to_json(&tagged)?)?;
        }
    }
    if let Some(path) = &a.dump_matrices {
        manifest.write_output(path, &dump_matrices(&cfg, &source)?)?;
    }
    if let Some(path) = &a.dump_lp {
        manifest.write_output(path, &dump_lps(&cfg, &source, a.attenuation_db)?)?;
    }
    finish_manifest(&manifest)?;
    Ok(0)
}

/// Sweep rows in attenuation order.
pub fn sweep_rows(
    cfg: &Config,
    points: &[f64],
    optimize_each: bool,
) -> crate::error::Result<Vec<(SecrecyReport, Option<OptResult>)>> {
    let opts = options(cfg.mode);
    points
        .par_iter()
        .map(|&db| {
            if optimize_each {
                let o = optimize(&cfg.params, db, &cfg.sweep.search, &opts)?;
                let source = SourceParams::new(o.intensity, o.delta_x, o.delta_z);
                Ok((evaluate(&cfg.params, &source, db, &opts)?, Some(o)))
            } else {
                Ok((
                    evaluate(&cfg.params, &cfg.source.resolve(), db, &opts)?,
                    None,
                ))
            }
        })
        .collect()
}

fn cmd_sweep(a: SweepArgs, args: Vec<String>) -> CliResult<i32> {
    let mut cfg = effective_config(&a.point)?;
    if let Some(v) = a.from_db {
        cfg.sweep.from_db = v;
    }
    if let Some(v) = a.to_db {
        cfg.sweep.to_db = v;
    }
    if let Some(v) = a.step_db {
        cfg.sweep.step_db = v;
    }
    cfg.sweep.optimize |= a.optimize;
    let points = cfg
        .sweep
        .points()
        .map_err(|e| usage(format!("empty sweep: {e}")))?;
    let rows = sweep_rows(&cfg, &points, cfg.sweep.optimize)?;

    let mut manifest = RunManifest::new("sweep", args, &cfg.to_json(), a.seed);
    let run_id = manifest.run_id.clone();
    let csv = reports_csv(&run_id, &rows)?;
    match &a.out {
        Some(path) => manifest.write_output(path, &csv)?,
        None => print_stdout(&csv)?,
    }
    if let Some(path) = &a.plot {
        let passive: Vec<(f64, f64)> = rows
            .iter()
            .map(|(r, _)| (r.attenuation_db, r.rate))
            .collect();
        let active: Vec<(f64, f64)> = points
            .iter()
            .map(|&db| Ok((db, active_baseline_optimal(db, &cfg.params)?.1)))
            .collect::<crate::error::Result<_>>()?;
        let label = if cfg.sweep.optimize {
            "passive (optimised)"
        } else {
            "passive"
        };
        let mut svg = svg_log_plot(
            "Secrecy message transmission rate",
            "channel attenuation (dB)",
            "rate (bits per pulse)",
            &[
                Series {
                    label: label.into(),
                    points: passive,
                },
                Series {
                    label: "active reference".into(),
                    points: active,
                },
            ],
        );
        svg = svg.replacen('\n', &format!("\n<desc>run_id {run_id}</desc>\n"), 1);
        manifest.write_output(path, &svg)?;
    }
    if let Some(path) = &a.trace {
        let traces: Vec<(f64, &[TraceRow])> = rows
            .iter()
            .filter_map(|(r, o)| o.as_ref().map(|o| (r.attenuation_db, o.trace.as_slice())))
            .collect();
        manifest.write_output(path, &trace_csv(&run_id, &traces)?)?;
    }
    if cfg.sweep.optimize {
        for w in rows.windows(2) {
            if w[1].0.rate > w[0].0.rate {
                eprintln!(
                    "warning: optimised rate increases from {} dB to {} dB",
                    w[0].0.attenuation_db, w[1].0.attenuation_db
                );
            }
        }
    }
    finish_manifest(&manifest)?;
    Ok(0)
}

fn cmd_validate(a: ValidateArgs, args: Vec<String>) -> CliResult<i32> {
    let cfg = read_config(a.config.as_deref())?;
    let settings = ValidationSettings {
        seed: a.seed,
        samples: a.samples,
        attenuation_db: a.attenuation_db,
        ..Default::default()
    };
    if settings.samples < 1000 {
        return Err(usage("--samples must be at least 1000"));
    }
    let report = run_validation(&cfg.params, &cfg.source.resolve(), cfg.mode, &settings)?;
    let mut manifest = RunManifest::new("validate", args, &cfg.to_json(), a.seed);
    let json = to_json(&report)?;
    match &a.out {
        Some(path) => manifest.write_output(path, &json)?,
        None => print_stdout(&json)?,
    }
    finish_manifest(&manifest)?;
    let failed = report.failed();
    if failed.is_empty() {
        Ok(0)
    } else {
        for c in failed {
            eprintln!(
                "FAILED {}: {} > {} ({})",
                c.name, c.statistic, c.threshold, c.detail
            );
        }
        Ok(2)
    }
}

fn cmd_distance(a: DistanceArgs, args: Vec<String>) -> CliResult<i32> {
    let mut cfg = read_config(a.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    let passive = max_distance(&cfg.params, &cfg.sweep.search, &options(cfg.mode))?;
    let active = max_distance_active(&cfg.params)?;
    #[derive(Serialize)]
    struct Out {
        passive: crate::optimizer::DistanceResult,
        active: crate::optimizer::DistanceResult,
        ratio: f64,
    }
    let ratio = passive.distance_km / active.distance_km;
    let json = to_json(&Out {
        passive,
        active,
        ratio,
    })?;
    let mut manifest = RunManifest::new("distance", args, &cfg.to_json(), 0);
    match &a.out {
        Some(path) => manifest.write_output(path, &json)?,
        None => print_stdout(&json)?,
    }
    finish_manifest(&manifest)?;
    Ok(0)
}

fn cmd_diagnose(a: DiagnoseArgs) -> CliResult<i32> {
    if a.n_cuts.is_empty() {
        return Err(usage("--n-cuts needs at least one value"));
    }
    let base = effective_config(&a.point)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n_cut",
        "rate",
        "z_capacity",
        "x_capacity",
        "z_y1_min",
        "z_e1_max",
        "x_y1_min",
        "x_e1_max",
    ])
    .map_err(Error::from)?;
    for &n in &a.n_cuts {
        let mut params = base.params;
        params.n_cut = n;
        params.validate()?;
        let opts = EvalOptions {
            mirror_y: true,
            ..options(base.mode)
        };
        let r = evaluate(&params, &base.source.resolve(), a.attenuation_db, &opts)?;
        let (z, x) = (r.basis(Basis::Z).unwrap(), r.basis(Basis::X).unwrap());
        let f = |v: f64| format!("{v:e}");
        w.write_record([
            n.to_string(),
            f(r.rate),
            f(z.capacity),
            f(x.capacity),
            f(z.bounds.y1_min),
            f(z.bounds.e1_max),
            f(x.bounds.y1_min),
            f(x.bounds.e1_max),
        ])
        .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::from(e.into_error()))?;
    print_stdout(&String::from_utf8_lossy(&bytes))?;
    Ok(0)
}

fn cmd_calibrate(a: CalibrateArgs, args: Vec<String>) -> CliResult<i32> {
    let mut cfg = read_config(a.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    let opts = EvalOptions {
        mirror_y: true,
        ..options(cfg.mode)
    };
    let cal = calibrate_kappa(&cfg.params, &REFERENCE_POINTS, &opts)?;
    let json = to_json(&cal)?;
    let mut manifest = RunManifest::new("calibrate", args, &cfg.to_json(), 0);
    match &a.out {
        Some(path) => manifest.write_output(path, &json)?,
        None => print_stdout(&json)?,
    }
    finish_manifest(&manifest)?;
    Ok(0)
}
