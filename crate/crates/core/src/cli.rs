//! Command-line front end.
//!
//! `bellsynth <subcommand> --config <path> --out <dir> [--seed N]`
//!
//! Every command writes CSV files into the output directory (atomically) and
//! prints `OK <command> <n_outputs>` on success. Exit status: 0 success,
//! 1 I/O failure, 2 usage or config error, 3 physics-domain error.
//! `BELLSYNTH_THREADS` caps the worker pool used by sweeps.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::biphoton::{biphoton_from_setup, BiphotonAmplitude};
use crate::concentrator::MeasurementSetting;
use crate::concentrator::{
    analyze_delay_curve, linspace_step, output_state, sweep_analyzer, sweep_delay, visibility,
    werner_epsilon, FeatureKind,
};
use crate::config::{DelayRange, RunConfig};
use crate::csv::{format_g9, write_atomic};
use crate::error::{Error, Result};
use crate::expsim::{
    coincidence_histogram, events_to_csv, reconstruct_state, simulate_events, state_to_csv,
    tomography_counts,
};
use crate::qstate::{coincidence_probability, concurrence, fidelity, TwoQubitState};
use crate::setup::{FilterParams, GridSpec, PumpParams, SetupConfig};

pub const THREADS_ENV: &str = "BELLSYNTH_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DelaySweep,
    AnalyzerSweep,
    Universality,
    WernerTrajectory,
    Events,
    Tomography,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::DelaySweep,
        Command::AnalyzerSweep,
        Command::Universality,
        Command::WernerTrajectory,
        Command::Events,
        Command::Tomography,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::DelaySweep => "delay-sweep",
            Command::AnalyzerSweep => "analyzer-sweep",
            Command::Universality => "universality",
            Command::WernerTrajectory => "werner-trajectory",
            Command::Events => "events",
            Command::Tomography => "tomography",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bellsynth",
    version,
    about = "Entanglement concentrator simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Coincidence rate versus interferometer delay.
    DelaySweep(CommonArgs),
    /// Coincidence rate versus analyzer angle at fixed delay.
    AnalyzerSweep(CommonArgs),
    /// Zero-delay visibility over pump bandwidth, crystal length and filter width.
    Universality(CommonArgs),
    /// Werner parameter, entropy and entanglement along a delay grid.
    WernerTrajectory(CommonArgs),
    /// Monte Carlo detection events and coincidence histogram.
    Events(CommonArgs),
    /// Simulated tomography counts and the reconstructed state.
    Tomography(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

impl CliCommand {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            CliCommand::DelaySweep(a) => (Command::DelaySweep, a),
            CliCommand::AnalyzerSweep(a) => (Command::AnalyzerSweep, a),
            CliCommand::Universality(a) => (Command::Universality, a),
            CliCommand::WernerTrajectory(a) => (Command::WernerTrajectory, a),
            CliCommand::Events(a) => (Command::Events, a),
            CliCommand::Tomography(a) => (Command::Tomography, a),
        }
    }
}

/// Files written by one command, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub command: Command,
    pub outputs: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn summary_line(&self) -> String {
        format!("OK {} {}", self.command, self.outputs.len())
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_PHYSICS,
    }
}

/// Entry point used by the binary. Returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, args) = cli.command.split();
    match run_with_env_threads(command, &args.config, &args.out, args.seed) {
        Ok(outcome) => {
            println!("{}", outcome.summary_line());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            exit_code(&e)
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config {
                line: 0,
                key: THREADS_ENV.into(),
                message: format!("expected a positive integer, got `{v}`"),
            }),
        },
    }
}

fn run_with_env_threads(
    command: Command,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<RunOutcome> {
    match threads_from_env()? {
        None => run(command, config, out, seed),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| run(command, config, out, seed))
        }
    }
}

/// Load `config`, run `command` and write its CSV files into `out`.
pub fn run(command: Command, config: &Path, out: &Path, seed: Option<u64>) -> Result<RunOutcome> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    run_config(command, &cfg, out)
}

pub fn run_config(command: Command, cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    cfg.setup.validate()?;
    std::fs::create_dir_all(out)?;
    let files = match command {
        Command::DelaySweep => delay_sweep(cfg)?,
        Command::AnalyzerSweep => analyzer_sweep(cfg)?,
        Command::Universality => universality(cfg)?,
        Command::WernerTrajectory => werner_trajectory(cfg)?,
        Command::Events => events(cfg)?,
        Command::Tomography => tomography(cfg)?,
    };
    let mut outputs = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        outputs.push(path);
    }
    Ok(RunOutcome { command, outputs })
}

type Files = Vec<(&'static str, String)>;

fn g(x: f64) -> String {
    format_g9(x)
}

/// Fills unset delay bounds with ±1.5 D·L (or [0, D·L] when `from_zero`)
/// and the step with the smallest whole femtosecond the grid allows.
fn delay_grid(range: &DelayRange, pi: &BiphotonAmplitude, from_zero: bool) -> Result<Vec<f64>> {
    let walkoff = pi.scales.walkoff_fs.abs();
    let (lo, hi) = if from_zero {
        (0.0, walkoff)
    } else {
        (-1.5 * walkoff, 1.5 * walkoff)
    };
    let start = range.start_fs.unwrap_or(lo);
    let stop = range.stop_fs.unwrap_or(hi);
    let min_step = crate::concentrator::MIN_TAU_STEP_IN_GRID_STEPS * pi.layout.dt_minus;
    let step = range.step_fs.unwrap_or(min_step.ceil());
    linspace_step(start, stop, step)
}

fn delay_sweep(cfg: &RunConfig) -> Result<Files> {
    let pi = biphoton_from_setup(&cfg.setup)?;
    let p = &cfg.delay_sweep;
    let taus = delay_grid(&p.range, &pi, false)?;
    let curve = sweep_delay(&pi, &taus, p.theta1_deg, p.theta2_deg, cfg.setup.phase_phi)?;
    let features = analyze_delay_curve(&curve)?;
    let vis = visibility(&curve)?;
    let kind = match features.kind {
        FeatureKind::Peak => "peak",
        FeatureKind::Dip => "dip",
    };
    let summary = format!(
        "feature,baseline,extremum_tau_fs,extremum_rate,fwhm_fs,base_width_fs,interference_visibility,visibility,walkoff_fs,n_plus,n_minus,dt_minus_fs\n\
         {kind},{},{},{},{},{},{},{},{},{},{},{}\n",
        g(features.baseline),
        g(features.extremum_tau_fs),
        g(features.extremum_rate),
        g(features.fwhm_fs),
        g(features.base_width_fs),
        g(features.interference_visibility),
        g(vis),
        g(pi.scales.walkoff_fs),
        pi.layout.n_plus,
        pi.layout.n_minus,
        g(pi.layout.dt_minus),
    );
    Ok(vec![
        ("delay_sweep.csv", curve.to_csv()),
        ("delay_sweep_summary.csv", summary),
    ])
}

fn analyzer_sweep(cfg: &RunConfig) -> Result<Files> {
    let pi = biphoton_from_setup(&cfg.setup)?;
    let a = &cfg.analyzer;
    let angles = linspace_step(a.theta2_start_deg, a.theta2_stop_deg, a.theta2_step_deg)?;
    let curve = sweep_analyzer(&pi, a.tau_fs, a.theta1_deg, &angles, cfg.setup.phase_phi)?;
    let vis = visibility(&curve)?;
    let summary = format!(
        "tau_fs,theta1_deg,phi_rad,visibility\n{},{},{},{}\n",
        g(a.tau_fs),
        g(a.theta1_deg),
        g(cfg.setup.phase_phi),
        g(vis)
    );
    Ok(vec![
        ("analyzer_sweep.csv", curve.to_csv()),
        ("analyzer_summary.csv", summary),
    ])
}

/// Largest point count tried when a grid point of the universality sweep
/// needs more resolution than the default grid offers.
pub const MAX_AUTO_GRID_POINTS: usize = 4096;

/// Biphoton on the default grid, doubling the point counts while the
/// resolution checks fail.
pub fn biphoton_auto_grid(setup: &SetupConfig) -> Result<BiphotonAmplitude> {
    let mut s = setup.clone();
    loop {
        match biphoton_from_setup(&s) {
            Err(Error::Resolution(msg)) => {
                let (np, nm) = s.grid.sizes(s.pump.mode);
                if nm >= MAX_AUTO_GRID_POINTS {
                    return Err(Error::Resolution(msg));
                }
                s.grid = GridSpec {
                    n_plus: Some(if np > 1 {
                        (2 * np).min(MAX_AUTO_GRID_POINTS)
                    } else {
                        1
                    }),
                    n_minus: Some(2 * nm),
                    ..s.grid
                };
            }
            other => return other,
        }
    }
}

/// Setup for one point of the universality grid: the base crystal angle,
/// pump centre and phase with the given pump bandwidth (0 = cw), crystal
/// length and identical filters on both arms (∞ = none). Grids are reset to
/// their defaults.
pub fn universality_setup(
    base: &SetupConfig,
    bandwidth_nm: f64,
    length_mm: f64,
    filter_fwhm_nm: f64,
) -> SetupConfig {
    let pump = if bandwidth_nm == 0.0 {
        PumpParams::cw(base.pump.center_nm)
    } else {
        PumpParams::pulsed(base.pump.center_nm, bandwidth_nm)
    };
    let filter = filter_fwhm_nm.is_finite().then_some(FilterParams {
        center_nm: 2.0 * base.pump.center_nm,
        fwhm_nm: filter_fwhm_nm,
    });
    let mut crystal = base.crystal;
    crystal.length_mm = length_mm;
    SetupConfig {
        crystal,
        pump,
        filter1: filter,
        filter2: filter,
        grid: GridSpec::default(),
        phase_phi: base.phase_phi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalityRow {
    pub pump_bandwidth_nm: f64,
    pub crystal_length_mm: f64,
    pub filter_fwhm_nm: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub visibility: f64,
}

pub fn universality_rows(cfg: &RunConfig) -> Result<Vec<UniversalityRow>> {
    let u = &cfg.universality;
    let a = &cfg.analyzer;
    let combos: Vec<(f64, f64, f64)> = u
        .pump_bandwidths_nm
        .iter()
        .flat_map(|&b| {
            u.crystal_lengths_mm
                .iter()
                .flat_map(move |&l| u.filter_fwhms_nm.iter().map(move |&f| (b, l, f)))
        })
        .collect();
    let angles = linspace_step(a.theta2_start_deg, a.theta2_stop_deg, a.theta2_step_deg)?;
    combos
        .par_iter()
        .map(|&(b, l, f)| {
            let setup = universality_setup(&cfg.setup, b, l, f);
            let pi = biphoton_auto_grid(&setup)?;
            let curve = sweep_analyzer(&pi, 0.0, a.theta1_deg, &angles, setup.phase_phi)?;
            Ok(UniversalityRow {
                pump_bandwidth_nm: b,
                crystal_length_mm: l,
                filter_fwhm_nm: f,
                n_plus: pi.layout.n_plus,
                n_minus: pi.layout.n_minus,
                visibility: visibility(&curve)?,
            })
        })
        .collect()
}

fn universality(cfg: &RunConfig) -> Result<Files> {
    let mut s = String::from(
        "pump_bandwidth_nm,crystal_length_mm,filter_fwhm_nm,n_plus,n_minus,visibility\n",
    );
    for r in universality_rows(cfg)? {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g(r.pump_bandwidth_nm),
            g(r.crystal_length_mm),
            if r.filter_fwhm_nm.is_finite() {
                g(r.filter_fwhm_nm)
            } else {
                "inf".into()
            },
            r.n_plus,
            r.n_minus,
            g(r.visibility)
        ));
    }
    Ok(vec![("universality.csv", s)])
}

fn werner_trajectory(cfg: &RunConfig) -> Result<Files> {
    let pi = biphoton_from_setup(&cfg.setup)?;
    let taus = delay_grid(&cfg.trajectory, &pi, true)?;
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let eps = werner_epsilon(&pi, tau)?;
            let m = output_state(&pi, tau, cfg.setup.phase_phi)?.metrics();
            Ok(format!(
                "{},{},{},{},{}\n",
                g(tau),
                g(eps),
                g(m.normalized_entropy),
                g(m.entanglement_of_formation),
                g(m.concurrence)
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("tau_fs,epsilon,S,E,concurrence\n");
    s.extend(rows);
    Ok(vec![("werner_trajectory.csv", s)])
}

fn state_at(cfg: &RunConfig, tau_fs: f64) -> Result<TwoQubitState> {
    let pi = biphoton_from_setup(&cfg.setup)?;
    output_state(&pi, tau_fs, cfg.setup.phase_phi)
}

fn events(cfg: &RunConfig) -> Result<Files> {
    let e = &cfg.events;
    let rho = state_at(cfg, e.tau_fs)?;
    let setting =
        MeasurementSetting::new(e.tau_fs, e.theta1_deg, e.theta2_deg, cfg.setup.phase_phi);
    let stream = simulate_events(&rho, &setting, &e.detection)?;
    let report = coincidence_histogram(&stream, &e.detection)?;
    let p = coincidence_probability(&rho, e.theta1_deg.to_radians(), e.theta2_deg.to_radians());
    let summary = format!(
        "singles1,singles2,in_window,accidental_estimate,true_estimate,expected_true\n{},{},{},{},{},{}\n",
        report.singles1,
        report.singles2,
        report.in_window,
        g(report.accidental_estimate),
        g(report.true_estimate()),
        g(e.detection.expected_true_coincidences(p)),
    );
    Ok(vec![
        ("events.csv", events_to_csv(&stream)),
        ("histogram.csv", report.histogram_csv()),
        ("coincidence_summary.csv", summary),
    ])
}

fn tomography(cfg: &RunConfig) -> Result<Files> {
    let t = &cfg.tomography;
    let rho = state_at(cfg, t.tau_fs)?;
    let counts = tomography_counts(&rho, t.shots, cfg.seed)?;
    let rec = reconstruct_state(&counts)?;
    let summary = format!(
        "shots,fidelity,concurrence_true,concurrence_reconstructed,max_element_error\n{},{},{},{},{}\n",
        t.shots,
        g(fidelity(&rho, &rec)),
        g(concurrence(&rho)),
        g(concurrence(&rec)),
        g(rec.max_element_distance(&rho)),
    );
    Ok(vec![
        ("counts.csv", counts.to_csv()),
        ("true_state.csv", state_to_csv(&rho)),
        ("reconstructed_state.csv", state_to_csv(&rec)),
        ("tomography_summary.csv", summary),
    ])
}
