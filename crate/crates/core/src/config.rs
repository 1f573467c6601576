//! Flat `section.key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Units are part of the key names. Unknown or repeated keys are errors so
//! that typos never fall back to defaults silently.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::dispersion::{CrystalParams, Cut, Material};
use crate::error::{Error, Result};
use crate::expsim::DetectionConfig;
use crate::setup::{FilterParams, GridSpec, PumpMode, PumpParams, SetupConfig};

pub const KNOWN_KEYS: &[&str] = &[
    "crystal.material",
    "crystal.length_mm",
    "crystal.angle_deg",
    "pump.mode",
    "pump.center_nm",
    "pump.bandwidth_nm",
    "filter1.center_nm",
    "filter1.fwhm_nm",
    "filter2.center_nm",
    "filter2.fwhm_nm",
    "grid.n_plus",
    "grid.n_minus",
    "grid.span_plus_fs",
    "grid.span_minus_fs",
    "phase.phi_rad",
    "sweep.tau_start_fs",
    "sweep.tau_stop_fs",
    "sweep.tau_step_fs",
    "sweep.theta1_deg",
    "sweep.theta2_deg",
    "analyzer.tau_fs",
    "analyzer.theta1_deg",
    "analyzer.theta2_start_deg",
    "analyzer.theta2_stop_deg",
    "analyzer.theta2_step_deg",
    "universality.pump_bandwidths_nm",
    "universality.crystal_lengths_mm",
    "universality.filter_fwhms_nm",
    "trajectory.tau_start_fs",
    "trajectory.tau_stop_fs",
    "trajectory.tau_step_fs",
    "detection.pair_rate_hz",
    "detection.efficiency1",
    "detection.efficiency2",
    "detection.background1_hz",
    "detection.background2_hz",
    "detection.window_ns",
    "detection.tac_bin_ns",
    "detection.duration_s",
    "detection.jitter_ns",
    "detection.tau_fs",
    "detection.theta1_deg",
    "detection.theta2_deg",
    "tomography.shots",
    "tomography.tau_fs",
    "run.seed",
];

/// Delay range; unset fields are filled from the crystal walk-off and the
/// grid step when the command runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayRange {
    pub start_fs: Option<f64>,
    pub stop_fs: Option<f64>,
    pub step_fs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySweepParams {
    pub range: DelayRange,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSweepParams {
    pub tau_fs: f64,
    pub theta1_deg: f64,
    pub theta2_start_deg: f64,
    pub theta2_stop_deg: f64,
    pub theta2_step_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalityParams {
    /// 0 selects a cw pump.
    pub pump_bandwidths_nm: Vec<f64>,
    pub crystal_lengths_mm: Vec<f64>,
    /// `inf` means no filter.
    pub filter_fwhms_nm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    pub detection: DetectionConfig,
    pub tau_fs: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyParams {
    pub shots: u64,
    pub tau_fs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub setup: SetupConfig,
    pub delay_sweep: DelaySweepParams,
    pub analyzer: AnalyzerSweepParams,
    pub universality: UniversalityParams,
    pub trajectory: DelayRange,
    pub events: EventParams,
    pub tomography: TomographyParams,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            setup: SetupConfig::cw_reference(),
            delay_sweep: DelaySweepParams {
                range: DelayRange::default(),
                theta1_deg: 45.0,
                theta2_deg: 45.0,
            },
            analyzer: AnalyzerSweepParams {
                tau_fs: 0.0,
                theta1_deg: 45.0,
                theta2_start_deg: 0.0,
                theta2_stop_deg: 180.0,
                theta2_step_deg: 1.0,
            },
            universality: UniversalityParams {
                pump_bandwidths_nm: vec![0.0, 1.0, 2.0, 4.0],
                crystal_lengths_mm: vec![0.5, 1.0, 3.0],
                filter_fwhms_nm: vec![f64::INFINITY, 20.0, 5.0, 1.0],
            },
            trajectory: DelayRange::default(),
            events: EventParams {
                detection: DetectionConfig::default(),
                tau_fs: 0.0,
                theta1_deg: 45.0,
                theta2_deg: 45.0,
            },
            tomography: TomographyParams {
                shots: 100_000,
                tau_fs: 0.0,
            },
            seed: 0,
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

fn config_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| {
                config_err(e.line, key, format!("cannot parse `{}`: {err}", e.value))
            }),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        let line = self.0.get(key).map(|e| e.line).unwrap_or(0);
        match self.take::<String>(key)? {
            None => Ok(None),
            Some(s) => parse_number(&s)
                .map(Some)
                .ok_or_else(|| config_err(line, key, format!("`{s}` is not a number"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let line = self.0.get(key).map(|e| e.line).unwrap_or(0);
        match self.take::<String>(key)? {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|item| {
                    parse_number(item).ok_or_else(|| {
                        config_err(line, key, format!("`{}` is not a number", item.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .and_then(|v| {
                    if v.is_empty() {
                        Err(config_err(line, key, "empty list"))
                    } else {
                        Ok(Some(v))
                    }
                }),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.0.get(key).map(|e| e.line).unwrap_or(0)
    }
}

/// Accepts `inf`/`none` for an absent filter besides ordinary decimals.
fn parse_number(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "none" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(config_err(line, content, "expected `section.key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(config_err(line, key, "missing value"));
        }
        if let Some(prev) = map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        ) {
            return Err(config_err(
                line,
                key,
                format!("duplicate key (first set on line {})", prev.line),
            ));
        }
    }
    Ok(Entries(map))
}

fn filter_from(
    e: &mut Entries,
    section: &str,
    default_center: f64,
) -> Result<Option<FilterParams>> {
    let center = e.number(&format!("{section}.center_nm"))?;
    let fwhm = e.number(&format!("{section}.fwhm_nm"))?;
    Ok(match fwhm {
        Some(w) if w.is_finite() => Some(FilterParams {
            center_nm: center.unwrap_or(default_center),
            fwhm_nm: w,
        }),
        _ => None,
    })
}

fn grid_count(e: &mut Entries, key: &str) -> Result<Option<usize>> {
    let line = e.line_of(key);
    let n = e.take::<usize>(key)?;
    if let Some(n) = n {
        if n == 0 {
            return Err(config_err(line, key, "must be positive"));
        }
    }
    Ok(n)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = tokenize(text)?;
        let mut cfg = RunConfig::default();
        let base = cfg.setup.crystal;

        let material = e
            .take::<Material>("crystal.material")?
            .unwrap_or(base.material);
        let length_mm = e.number("crystal.length_mm")?.unwrap_or(base.length_mm);
        let angle = e
            .number("crystal.angle_deg")?
            .unwrap_or(base.phase_matching_angle_deg);
        cfg.setup.crystal = CrystalParams {
            material,
            length_mm,
            phase_matching_angle_deg: angle,
            cut: Cut::TypeII,
        };

        let mode = e.take::<PumpMode>("pump.mode")?.unwrap_or(PumpMode::Cw);
        let center = e
            .number("pump.center_nm")?
            .unwrap_or(cfg.setup.pump.center_nm);
        let bw_line = e.line_of("pump.bandwidth_nm");
        let bandwidth = e.number("pump.bandwidth_nm")?;
        cfg.setup.pump = match mode {
            PumpMode::Cw => {
                if bandwidth.is_some_and(|b| b != 0.0) {
                    return Err(config_err(
                        bw_line,
                        "pump.bandwidth_nm",
                        "cw pump takes no bandwidth",
                    ));
                }
                PumpParams::cw(center)
            }
            PumpMode::Pulsed => PumpParams::pulsed(
                center,
                bandwidth.ok_or_else(|| {
                    config_err(0, "pump.bandwidth_nm", "required for a pulsed pump")
                })?,
            ),
        };

        let down = 2.0 * center;
        cfg.setup.filter1 = filter_from(&mut e, "filter1", down)?;
        cfg.setup.filter2 = filter_from(&mut e, "filter2", down)?;
        cfg.setup.grid = GridSpec {
            n_plus: grid_count(&mut e, "grid.n_plus")?,
            n_minus: grid_count(&mut e, "grid.n_minus")?,
            span_plus_fs: e.number("grid.span_plus_fs")?,
            span_minus_fs: e.number("grid.span_minus_fs")?,
        };
        if let Some(phi) = e.number("phase.phi_rad")? {
            cfg.setup.phase_phi = phi;
        }

        let ds = &mut cfg.delay_sweep;
        ds.range = DelayRange {
            start_fs: e.number("sweep.tau_start_fs")?,
            stop_fs: e.number("sweep.tau_stop_fs")?,
            step_fs: e.number("sweep.tau_step_fs")?,
        };
        set(&mut ds.theta1_deg, e.number("sweep.theta1_deg")?);
        set(&mut ds.theta2_deg, e.number("sweep.theta2_deg")?);

        let an = &mut cfg.analyzer;
        set(&mut an.tau_fs, e.number("analyzer.tau_fs")?);
        set(&mut an.theta1_deg, e.number("analyzer.theta1_deg")?);
        set(
            &mut an.theta2_start_deg,
            e.number("analyzer.theta2_start_deg")?,
        );
        set(
            &mut an.theta2_stop_deg,
            e.number("analyzer.theta2_stop_deg")?,
        );
        set(
            &mut an.theta2_step_deg,
            e.number("analyzer.theta2_step_deg")?,
        );

        let un = &mut cfg.universality;
        set(
            &mut un.pump_bandwidths_nm,
            e.list("universality.pump_bandwidths_nm")?,
        );
        set(
            &mut un.crystal_lengths_mm,
            e.list("universality.crystal_lengths_mm")?,
        );
        set(
            &mut un.filter_fwhms_nm,
            e.list("universality.filter_fwhms_nm")?,
        );

        cfg.trajectory = DelayRange {
            start_fs: e.number("trajectory.tau_start_fs")?,
            stop_fs: e.number("trajectory.tau_stop_fs")?,
            step_fs: e.number("trajectory.tau_step_fs")?,
        };

        let ev = &mut cfg.events;
        let d = &mut ev.detection;
        set(&mut d.pair_rate_hz, e.number("detection.pair_rate_hz")?);
        set(&mut d.efficiency1, e.number("detection.efficiency1")?);
        set(&mut d.efficiency2, e.number("detection.efficiency2")?);
        set(&mut d.background1_hz, e.number("detection.background1_hz")?);
        set(&mut d.background2_hz, e.number("detection.background2_hz")?);
        set(
            &mut d.coincidence_window_ns,
            e.number("detection.window_ns")?,
        );
        set(&mut d.tac_bin_ns, e.number("detection.tac_bin_ns")?);
        set(&mut d.duration_s, e.number("detection.duration_s")?);
        set(&mut d.jitter_ns, e.number("detection.jitter_ns")?);
        set(&mut ev.tau_fs, e.number("detection.tau_fs")?);
        set(&mut ev.theta1_deg, e.number("detection.theta1_deg")?);
        set(&mut ev.theta2_deg, e.number("detection.theta2_deg")?);

        set(
            &mut cfg.tomography.shots,
            e.take::<u64>("tomography.shots")?,
        );
        set(&mut cfg.tomography.tau_fs, e.number("tomography.tau_fs")?);
        set(&mut cfg.seed, e.take::<u64>("run.seed")?);

        debug_assert!(
            e.0.is_empty(),
            "unconsumed keys: {:?}",
            e.0.keys().collect::<Vec<_>>()
        );
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.events.detection.rng_seed = seed;
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
