//! Experimental setup description: crystal, pump, filters and numeric grid.

use std::fmt;
use std::str::FromStr;

use crate::dispersion::{dispersion_summary, CrystalParams, DispersionSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpMode {
    Cw,
    Pulsed,
}

impl fmt::Display for PumpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PumpMode::Cw => "cw",
            PumpMode::Pulsed => "pulsed",
        })
    }
}

impl FromStr for PumpMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cw" => Ok(PumpMode::Cw),
            "pulsed" => Ok(PumpMode::Pulsed),
            other => Err(format!(
                "unknown pump mode `{other}` (expected cw or pulsed)"
            )),
        }
    }
}

/// Pump laser. `bandwidth_nm` is the intensity FWHM; zero for cw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    pub mode: PumpMode,
    pub center_nm: f64,
    pub bandwidth_nm: f64,
}

impl PumpParams {
    pub fn cw(center_nm: f64) -> Self {
        Self {
            mode: PumpMode::Cw,
            center_nm,
            bandwidth_nm: 0.0,
        }
    }

    pub fn pulsed(center_nm: f64, bandwidth_nm: f64) -> Self {
        Self {
            mode: PumpMode::Pulsed,
            center_nm,
            bandwidth_nm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_nm > 0.0) || !self.center_nm.is_finite() {
            return Err(Error::Domain(format!(
                "pump centre wavelength must be positive, got {}",
                self.center_nm
            )));
        }
        match self.mode {
            PumpMode::Cw if self.bandwidth_nm != 0.0 => {
                Err(Error::Domain("cw pump must have zero bandwidth".into()))
            }
            PumpMode::Pulsed if !(self.bandwidth_nm > 0.0) || !self.bandwidth_nm.is_finite() => {
                Err(Error::Domain(format!(
                    "pulsed pump needs a positive bandwidth, got {}",
                    self.bandwidth_nm
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Gaussian interference filter. `fwhm_nm` is the intensity FWHM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_nm > 0.0) {
            return Err(Error::Domain(format!(
                "filter FWHM must be positive, got {}",
                self.fwhm_nm
            )));
        }
        if !(self.center_nm > 0.0) || !self.center_nm.is_finite() {
            return Err(Error::Domain(format!(
                "filter centre must be positive, got {}",
                self.center_nm
            )));
        }
        Ok(())
    }
}

/// Numeric grid for the biphoton amplitude. Unset fields are derived from
/// the setup (see `biphoton::resolve_grid`).
///
/// `n_plus`/`span_plus_fs` refer to the mean-time axis t₊ and its conjugate
/// sum frequency; `n_minus`/`span_minus_fs` to the relative-time axis t₋.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridSpec {
    pub n_plus: Option<usize>,
    pub n_minus: Option<usize>,
    pub span_plus_fs: Option<f64>,
    pub span_minus_fs: Option<f64>,
}

pub const DEFAULT_CW_POINTS: usize = 1024;
pub const DEFAULT_PULSED_POINTS: usize = 512;

impl GridSpec {
    /// The same grid with every point count doubled and spans kept, i.e. twice the
    /// time resolution.
    pub fn refined(&self, mode: PumpMode) -> GridSpec {
        let (np, nm) = self.sizes(mode);
        GridSpec {
            n_plus: Some(if mode == PumpMode::Cw { 1 } else { 2 * np }),
            n_minus: Some(2 * nm),
            ..*self
        }
    }

    pub fn sizes(&self, mode: PumpMode) -> (usize, usize) {
        match mode {
            PumpMode::Cw => (1, self.n_minus.unwrap_or(DEFAULT_CW_POINTS)),
            PumpMode::Pulsed => (
                self.n_plus.unwrap_or(DEFAULT_PULSED_POINTS),
                self.n_minus.unwrap_or(DEFAULT_PULSED_POINTS),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetupConfig {
    pub crystal: CrystalParams,
    pub pump: PumpParams,
    pub filter1: Option<FilterParams>,
    pub filter2: Option<FilterParams>,
    pub grid: GridSpec,
    pub phase_phi: f64,
}

impl SetupConfig {
    /// cw argon-ion run: 351.1 nm pump, 3 mm BBO, no filters.
    pub fn cw_reference() -> Self {
        Self {
            crystal: CrystalParams::bbo(3.0, 49.2).expect("valid crystal"),
            pump: PumpParams::cw(351.1),
            filter1: None,
            filter2: None,
            grid: GridSpec::default(),
            phase_phi: 0.0,
        }
    }

    /// Ultrafast run: 390 nm pump with 2 nm bandwidth, 3 mm BBO, 20 nm filters.
    pub fn pulsed_reference() -> Self {
        let filter = FilterParams {
            center_nm: 780.0,
            fwhm_nm: 20.0,
        };
        Self {
            crystal: CrystalParams::bbo(3.0, 43.5).expect("valid crystal"),
            pump: PumpParams::pulsed(390.0, 2.0),
            filter1: Some(filter),
            filter2: Some(filter),
            grid: GridSpec::default(),
            phase_phi: 0.0,
        }
    }

    pub fn down_center_nm(&self) -> f64 {
        2.0 * self.pump.center_nm
    }

    pub fn validate(&self) -> Result<()> {
        self.crystal.validate()?;
        self.pump.validate()?;
        for f in self.filter1.iter().chain(self.filter2.iter()) {
            f.validate()?;
        }
        if !self.phase_phi.is_finite() {
            return Err(Error::Domain("phase must be finite".into()));
        }
        Ok(())
    }

    pub fn dispersion(&self) -> Result<DispersionSummary> {
        self.validate()?;
        dispersion_summary(&self.crystal, self.pump.center_nm, self.down_center_nm())
    }
}
