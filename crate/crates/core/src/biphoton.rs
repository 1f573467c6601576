//! Two-photon amplitude of type-II down-conversion.
//!
//! The joint spectral amplitude follows the first-order group-velocity model
//!
//! ```text
//! Φ(ν₁, ν₂) = α(ν₁+ν₂) · e^{iΔL/2} sinc(ΔL/2) · f₁(ν₁) · f₂(ν₂)
//! Δ = (1/u_o − 1/u_p)·ν₁ + (1/u_e − 1/u_p)·ν₂
//! ```
//!
//! with ν the angular-frequency detuning (rad/fs) from degeneracy. Photon 1 is
//! the o-ray, photon 2 the e-ray. α is a Gaussian pump envelope and fᵢ are
//! Gaussian filter amplitudes. The phase factor places the biphoton at
//! t₋ = t₁ − t₂ ∈ [0, D·L], so a cw pump yields a flat-top of width D·L.
//!
//! Spectra are sampled on a lattice in sum and half-difference frequency,
//! `Ω = ν₁ + ν₂` and `δ = (ν₁ − ν₂)/2`, which are the Fourier conjugates of
//! t₊ = (t₁ + t₂)/2 and t₋. A 2D transform of that lattice lands directly on a
//! regular (t₊, t₋) grid, so the change of variables needs no resampling and
//! the Jacobian is one.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::csv::format_g9;
use crate::dispersion::{DispersionSummary, C_NM_PER_FS};
use crate::error::{Error, Result};
use crate::setup::{FilterParams, PumpMode, SetupConfig};

/// Minimum samples across the sinc main lobe.
pub const MIN_LOBE_SAMPLES: f64 = 8.0;
/// Spectral span must cover this many pump bandwidths and main-lobe widths.
pub const MIN_SPAN_FACTOR: f64 = 5.0;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Intensity FWHM in nm around `center_nm` converted to angular frequency (rad/fs).
pub fn fwhm_nm_to_rad_per_fs(fwhm_nm: f64, center_nm: f64) -> f64 {
    2.0 * PI * C_NM_PER_FS * fwhm_nm / (center_nm * center_nm)
}

/// Gaussian amplitude envelope whose *intensity* has FWHM `fwhm`:
/// |g|² = exp(−4 ln2 x²/fwhm²), hence g = exp(−2 ln2 x²/fwhm²). The amplitude
/// FWHM is √2 larger than the intensity FWHM.
fn gaussian_amplitude(x: f64, fwhm: f64) -> f64 {
    (-2.0 * LN_2 * x * x / (fwhm * fwhm)).exp()
}

/// Intensity FWHM in time of a transform-limited Gaussian with spectral
/// intensity FWHM `fwhm_rad_per_fs`.
fn transform_limited_fwhm_fs(fwhm_rad_per_fs: f64) -> f64 {
    4.0 * LN_2 / fwhm_rad_per_fs
}

#[derive(Debug, Clone, Copy)]
struct FilterEnvelope {
    center: f64,
    fwhm: f64,
}

impl FilterEnvelope {
    fn new(f: &FilterParams, down_center_nm: f64) -> Self {
        let center = 2.0 * PI * C_NM_PER_FS * (1.0 / f.center_nm - 1.0 / down_center_nm);
        Self {
            center,
            fwhm: fwhm_nm_to_rad_per_fs(f.fwhm_nm, f.center_nm),
        }
    }

    fn amplitude(&self, nu: f64) -> f64 {
        if self.fwhm.is_infinite() {
            1.0
        } else {
            gaussian_amplitude(nu - self.center, self.fwhm)
        }
    }

    fn coherence_time_fs(&self) -> f64 {
        if self.fwhm.is_infinite() {
            0.0
        } else {
            transform_limited_fwhm_fs(self.fwhm)
        }
    }
}

/// Lattice geometry shared by the spectral and temporal grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLayout {
    pub n_plus: usize,
    pub n_minus: usize,
    /// Time steps (fs). For the cw reduction `dt_plus` is a unit measure.
    pub dt_plus: f64,
    pub dt_minus: f64,
}

impl GridLayout {
    /// Sum-frequency step dΩ (rad/fs); unit measure for the cw reduction.
    pub fn d_sum(&self) -> f64 {
        if self.n_plus == 1 {
            1.0
        } else {
            2.0 * PI / (self.n_plus as f64 * self.dt_plus)
        }
    }

    /// Half-difference-frequency step dδ (rad/fs).
    pub fn d_diff(&self) -> f64 {
        2.0 * PI / (self.n_minus as f64 * self.dt_minus)
    }

    pub fn span_minus_fs(&self) -> f64 {
        self.n_minus as f64 * self.dt_minus
    }

    pub fn span_plus_fs(&self) -> f64 {
        self.n_plus as f64 * self.dt_plus
    }

    fn centered(i: usize, n: usize) -> f64 {
        i as f64 - (n / 2) as f64
    }

    pub fn sum_freq(&self, i: usize) -> f64 {
        if self.n_plus == 1 {
            0.0
        } else {
            Self::centered(i, self.n_plus) * self.d_sum()
        }
    }

    pub fn diff_freq(&self, j: usize) -> f64 {
        Self::centered(j, self.n_minus) * self.d_diff()
    }

    pub fn t_plus(&self, i: usize) -> f64 {
        if self.n_plus == 1 {
            0.0
        } else {
            Self::centered(i, self.n_plus) * self.dt_plus
        }
    }

    pub fn t_minus(&self, j: usize) -> f64 {
        Self::centered(j, self.n_minus) * self.dt_minus
    }
}

/// Physical scales carried alongside the sampled amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonScales {
    pub mode: PumpMode,
    /// o/e walk-off D·L in fs.
    pub walkoff_fs: f64,
    /// Pump-to-pair group-delay mismatch D₊·L in fs.
    pub pump_walkoff_fs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    pub layout: GridLayout,
    pub scales: BiphotonScales,
    /// Row-major: row = sum-frequency index, column = difference index.
    values: Vec<Complex64>,
}

impl SpectralAmplitude {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i_sum: usize, j_diff: usize) -> Complex64 {
        self.values[i_sum * self.layout.n_minus + j_diff]
    }

    /// Photon detunings (ν₁, ν₂) at a lattice point.
    pub fn detunings(&self, i_sum: usize, j_diff: usize) -> (f64, f64) {
        let omega = self.layout.sum_freq(i_sum);
        let delta = self.layout.diff_freq(j_diff);
        (0.5 * omega + delta, 0.5 * omega - delta)
    }

    /// ∬|Φ|² dΩ dδ.
    pub fn norm(&self) -> f64 {
        let measure = self.layout.d_sum() * self.layout.d_diff();
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * measure
    }
}

/// Π(t₊, t₋) on a regular grid. t₋ = t₁ − t₂ (o minus e), t₊ = (t₁ + t₂)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonAmplitude {
    pub layout: GridLayout,
    pub scales: BiphotonScales,
    values: Vec<Complex64>,
}

impl BiphotonAmplitude {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i_plus: usize, j_minus: usize) -> Complex64 {
        self.values[i_plus * self.layout.n_minus + j_minus]
    }

    pub fn row(&self, i_plus: usize) -> &[Complex64] {
        let n = self.layout.n_minus;
        &self.values[i_plus * n..(i_plus + 1) * n]
    }

    /// ∬|Π|² dt₊ dt₋.
    pub fn norm(&self) -> f64 {
        let measure = self.layout.dt_plus * self.layout.dt_minus;
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * measure
    }

    /// Marginal ∫|Π|² dt₊ as a function of t₋.
    pub fn minus_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n_minus];
        for i in 0..self.layout.n_plus {
            for (o, z) in out.iter_mut().zip(self.row(i)) {
                *o += z.norm_sqr() * self.layout.dt_plus;
            }
        }
        out
    }

    /// Root-mean-square width of the t₋ marginal (fs).
    pub fn rms_width_minus(&self) -> f64 {
        let m = self.minus_marginal();
        let total: f64 = m.iter().sum();
        let mean: f64 = m
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.layout.t_minus(j))
            .sum::<f64>()
            / total;
        let var: f64 = m
            .iter()
            .enumerate()
            .map(|(j, w)| w * (self.layout.t_minus(j) - mean).powi(2))
            .sum::<f64>()
            / total;
        var.sqrt()
    }

    /// Width of the t₋ interval between the `(1−fraction)/2` and
    /// `(1+fraction)/2` quantiles of the marginal, i.e. the span holding
    /// `fraction` of the energy.
    pub fn support_width_minus(&self, fraction: f64) -> f64 {
        let m = self.minus_marginal();
        let total: f64 = m.iter().sum();
        let lo_target = 0.5 * (1.0 - fraction) * total;
        let hi_target = 0.5 * (1.0 + fraction) * total;
        let dt = self.layout.dt_minus;
        let mut acc = 0.0;
        let (mut lo, mut hi) = (None, None);
        for (j, w) in m.iter().enumerate() {
            let next = acc + w;
            let t0 = self.layout.t_minus(j) - 0.5 * dt;
            if lo.is_none() && next >= lo_target {
                lo = Some(t0 + dt * (lo_target - acc) / w);
            }
            if hi.is_none() && next >= hi_target {
                hi = Some(t0 + dt * (hi_target - acc) / w);
            }
            acc = next;
        }
        match (lo, hi) {
            (Some(a), Some(b)) => b - a,
            _ => f64::NAN,
        }
    }

    /// Debug export: `t_plus_fs,t_minus_fs,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_plus_fs,t_minus_fs,re,im")?;
        for i in 0..self.layout.n_plus {
            for j in 0..self.layout.n_minus {
                let z = self.value(i, j);
                writeln!(
                    w,
                    "{},{},{},{}",
                    format_g9(self.layout.t_plus(i)),
                    format_g9(self.layout.t_minus(j)),
                    format_g9(z.re),
                    format_g9(z.im)
                )?;
            }
        }
        Ok(())
    }
}

/// Picks spans for unset grid fields and checks the resolution requirements.
pub fn resolve_grid(setup: &SetupConfig, disp: &DispersionSummary) -> Result<GridLayout> {
    let mode = setup.pump.mode;
    let (n_plus, n_minus) = setup.grid.sizes(mode);
    for (name, n) in [("grid.n_plus", n_plus), ("grid.n_minus", n_minus)] {
        if !n.is_power_of_two() || (n < 2 && !(mode == PumpMode::Cw && name == "grid.n_plus")) {
            return Err(Error::Resolution(format!(
                "{name} must be a power of two >= 2, got {n}"
            )));
        }
    }

    let down = setup.down_center_nm();
    let walkoff = disp.walkoff_fs().abs();
    let pump_walkoff = (disp.d_plus * disp.length_mm).abs();
    let filter_time = [setup.filter1, setup.filter2]
        .iter()
        .flatten()
        .map(|f| FilterEnvelope::new(f, down).coherence_time_fs())
        .fold(0.0, f64::max);
    let pump_fwhm = match mode {
        PumpMode::Cw => 0.0,
        PumpMode::Pulsed => fwhm_nm_to_rad_per_fs(setup.pump.bandwidth_nm, setup.pump.center_nm),
    };
    let pump_time = if pump_fwhm > 0.0 {
        transform_limited_fwhm_fs(pump_fwhm)
    } else {
        0.0
    };

    let span_minus = setup
        .grid
        .span_minus_fs
        .unwrap_or_else(|| (6.0 * walkoff).max(2.0 * (walkoff + 6.0 * filter_time)));
    let dt_minus = span_minus / n_minus as f64;

    let dt_plus = match mode {
        PumpMode::Cw => 1.0,
        PumpMode::Pulsed => {
            let span_plus = setup
                .grid
                .span_plus_fs
                .unwrap_or(2.0 * (2.0 * pump_walkoff + 4.0 * pump_time + 4.0 * filter_time));
            span_plus / n_plus as f64
        }
    };
    if !(dt_minus > 0.0 && dt_minus.is_finite() && dt_plus > 0.0 && dt_plus.is_finite()) {
        return Err(Error::Resolution(
            "grid spans must be positive and finite".into(),
        ));
    }
    let layout = GridLayout {
        n_plus,
        n_minus,
        dt_plus,
        dt_minus,
    };

    // sinc main lobe along δ: zeros at δ·D·L/2 = ±π
    let lobe_diff = 4.0 * PI / walkoff;
    let samples = lobe_diff / layout.d_diff();
    if samples < MIN_LOBE_SAMPLES {
        return Err(Error::Resolution(format!(
            "sinc main lobe covered by {samples:.1} samples along the difference axis; need {MIN_LOBE_SAMPLES}"
        )));
    }
    if n_minus as f64 * layout.d_diff() < MIN_SPAN_FACTOR * lobe_diff {
        return Err(Error::Resolution(
            "difference-frequency span narrower than 5 sinc main lobes".into(),
        ));
    }
    if span_minus < 6.0 * walkoff * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "t- window {span_minus:.1} fs must cover [-3 D·L, 3 D·L] = {:.1} fs",
            6.0 * walkoff
        )));
    }
    if mode == PumpMode::Pulsed {
        let span_sum = n_plus as f64 * layout.d_sum();
        if span_sum < MIN_SPAN_FACTOR * pump_fwhm {
            return Err(Error::Resolution(
                "sum-frequency span narrower than 5 pump bandwidths".into(),
            ));
        }
        if pump_walkoff > 0.0 {
            let lobe_sum = 4.0 * PI / pump_walkoff;
            if lobe_sum / layout.d_sum() < MIN_LOBE_SAMPLES {
                return Err(Error::Resolution(
                    "sinc main lobe under-resolved along the sum-frequency axis".into(),
                ));
            }
            if span_sum < MIN_SPAN_FACTOR * lobe_sum {
                return Err(Error::Resolution(
                    "sum-frequency span narrower than 5 sinc main lobes".into(),
                ));
            }
        }
        if pump_fwhm / layout.d_sum() < 2.0 {
            return Err(Error::Resolution(
                "pump spectrum under-resolved along the sum-frequency axis".into(),
            ));
        }
    }
    Ok(layout)
}

/// Samples Φ(ν₁, ν₂) for `setup` on `layout`.
pub fn joint_spectral_amplitude(
    setup: &SetupConfig,
    disp: &DispersionSummary,
    layout: &GridLayout,
) -> Result<SpectralAmplitude> {
    let down = setup.down_center_nm();
    let length = setup.crystal.length_mm;
    let k1 = disp.inv_u_o() - disp.inv_u_p();
    let k2 = disp.inv_u_e() - disp.inv_u_p();
    let pump_fwhm = match setup.pump.mode {
        PumpMode::Cw => None,
        PumpMode::Pulsed => Some(fwhm_nm_to_rad_per_fs(
            setup.pump.bandwidth_nm,
            setup.pump.center_nm,
        )),
    };
    let f1 = setup.filter1.map(|f| FilterEnvelope::new(&f, down));
    let f2 = setup.filter2.map(|f| FilterEnvelope::new(&f, down));

    let mut values = Vec::with_capacity(layout.n_plus * layout.n_minus);
    for i in 0..layout.n_plus {
        let omega = layout.sum_freq(i);
        let alpha = pump_fwhm.map_or(1.0, |w| gaussian_amplitude(omega, w));
        for j in 0..layout.n_minus {
            let delta = layout.diff_freq(j);
            let nu1 = 0.5 * omega + delta;
            let nu2 = 0.5 * omega - delta;
            let half_phase = 0.5 * (k1 * nu1 + k2 * nu2) * length;
            let filt = f1.map_or(1.0, |f| f.amplitude(nu1)) * f2.map_or(1.0, |f| f.amplitude(nu2));
            let mag = alpha * sinc(half_phase) * filt;
            values.push(Complex64::from_polar(1.0, half_phase) * mag);
        }
    }
    if values
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Domain("non-finite spectral amplitude".into()));
    }
    let amp = SpectralAmplitude {
        layout: *layout,
        scales: BiphotonScales {
            mode: setup.pump.mode,
            walkoff_fs: disp.walkoff_fs(),
            pump_walkoff_fs: disp.d_plus * length,
        },
        values,
    };
    if !(amp.norm() > 0.0) {
        return Err(Error::Domain(
            "spectral amplitude vanishes on the grid (filters detuned?)".into(),
        ));
    }
    Ok(amp)
}

/// Centered unitary DFT along one axis in place:
/// out[m] = Σ_k in[k] e^{−i x_k t_m} with centered x and t.
fn centered_dft(data: &mut [Complex64], fft: &dyn rustfft::Fft<f64>) {
    let n = data.len();
    for (k, z) in data.iter_mut().enumerate() {
        if k % 2 == 1 {
            *z = -*z;
        }
    }
    fft.process(data);
    let global = if (n / 2) % 2 == 1 { -1.0 } else { 1.0 };
    for (m, z) in data.iter_mut().enumerate() {
        let s = if m % 2 == 1 { -global } else { global };
        *z *= s;
    }
}

/// Π(t₊, t₋) = (dΩ dδ / 2π) Σ Φ(Ω, δ) e^{−i(Ω t₊ + δ t₋)}; Parseval-consistent
/// so that ∬|Π|² = ∬|Φ|².
pub fn time_domain_amplitude(phi: &SpectralAmplitude) -> BiphotonAmplitude {
    let layout = phi.layout;
    let (np, nm) = (layout.n_plus, layout.n_minus);
    let mut data = phi.values.clone();
    let mut planner = FftPlanner::<f64>::new();

    let fft_minus = planner.plan_fft_forward(nm);
    for row in data.chunks_mut(nm) {
        centered_dft(row, fft_minus.as_ref());
    }
    let scale = if np > 1 {
        let fft_plus = planner.plan_fft_forward(np);
        let mut column = vec![Complex64::new(0.0, 0.0); np];
        for j in 0..nm {
            for i in 0..np {
                column[i] = data[i * nm + j];
            }
            centered_dft(&mut column, fft_plus.as_ref());
            for i in 0..np {
                data[i * nm + j] = column[i];
            }
        }
        layout.d_sum() * layout.d_diff() / (2.0 * PI)
    } else {
        layout.d_diff() / (2.0 * PI).sqrt()
    };
    for z in data.iter_mut() {
        *z *= scale;
    }
    BiphotonAmplitude {
        layout,
        scales: phi.scales,
        values: data,
    }
}

/// Full pipeline: dispersion, grid, spectrum, transform.
pub fn biphoton_from_setup(setup: &SetupConfig) -> Result<BiphotonAmplitude> {
    let disp = setup.dispersion()?;
    let layout = resolve_grid(setup, &disp)?;
    let phi = joint_spectral_amplitude(setup, &disp, &layout)?;
    Ok(time_domain_amplitude(&phi))
}

/// Closed-form cw amplitude: unit flat-top on t₋ ∈ [0, D·L], independent of
/// t₊, sampled on the grid the numeric pipeline would use. Boundary cells take
/// the fraction of the cell covered by the interval.
pub fn analytic_pi_cw(setup: &SetupConfig, disp: &DispersionSummary) -> Result<BiphotonAmplitude> {
    if setup.pump.mode != PumpMode::Cw {
        return Err(Error::Misuse(
            "analytic flat-top amplitude only applies to a cw pump".into(),
        ));
    }
    let layout = resolve_grid(setup, disp)?;
    let walkoff = disp.walkoff_fs();
    let (lo, hi) = if walkoff >= 0.0 {
        (0.0, walkoff)
    } else {
        (walkoff, 0.0)
    };
    let dt = layout.dt_minus;
    let values = (0..layout.n_minus)
        .map(|j| {
            let t = layout.t_minus(j);
            let covered = ((t + 0.5 * dt).min(hi) - (t - 0.5 * dt).max(lo)).max(0.0);
            Complex64::new(covered / dt, 0.0)
        })
        .collect();
    Ok(BiphotonAmplitude {
        layout,
        scales: BiphotonScales {
            mode: PumpMode::Cw,
            walkoff_fs: walkoff,
            pump_walkoff_fs: disp.d_plus * disp.length_mm,
        },
        values,
    })
}

/// L2 distance between two amplitudes on the same grid after normalizing
/// both to unit norm and removing the best global phase.
pub fn normalized_l2_difference(a: &BiphotonAmplitude, b: &BiphotonAmplitude) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::Contract("amplitudes live on different grids".into()));
    }
    let na = a.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let inner: Complex64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.conj() * y)
        .sum();
    let phase = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let d2: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x / na - y * phase.conj() / nb).norm_sqr())
        .sum();
    Ok(d2.sqrt())
}
