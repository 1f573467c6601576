//! Coincidence rate behind the interferometric concentrator, delay and
//! analyzer sweeps, and the map from interferometer delay to output state.
//!
//! With `a = cosθ₁cosθ₂`, `b = sinθ₁sinθ₂` the rate is
//!
//! ```text
//! R(τ) = ∬ |a·Π(t₊+τ/2, t₋+τ) + e^{iφ}·b·Π(t₊+τ/2, t₋−τ)|² dt₊ dt₋
//!      = (a² + b²)·N + 2ab·Re(e^{−iφ}·O(τ))
//! O(τ) = ∬ Π(t₊, t₋+τ)·Π*(t₊, t₋−τ) dt₊ dt₋,   N = ∬|Π|²
//! ```
//!
//! Shifting both arguments does not change the diagonal terms, so only the
//! cross term needs the shifted grid: O is evaluated as the overlap of Π with
//! a copy displaced by 2τ along t₋, using linear interpolation and zero
//! padding. Rates are reported relative to the τ = 0, 45°/45°, φ = 0 value,
//! which equals N.
//!
//! The cos·cos term is the transmitted-transmitted path and the sin·sin term
//! the reflected-reflected path; in the output state they are the HH and VV
//! amplitudes respectively, with analyzer angles measured from H.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::biphoton::BiphotonAmplitude;
use crate::csv::format_g9;
use crate::error::{Error, Result};
use crate::qstate::{partial_state, TwoQubitState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub tau_fs: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    /// Phase on the reflected-reflected amplitude, radians.
    pub phi: f64,
}

impl MeasurementSetting {
    pub fn new(tau_fs: f64, theta1_deg: f64, theta2_deg: f64, phi: f64) -> Self {
        Self {
            tau_fs,
            theta1_deg,
            theta2_deg,
            phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbscissaKind {
    DelayFs,
    AnalyzerDeg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub kind: AbscissaKind,
    pub points: Vec<(f64, f64)>,
}

impl SweepCurve {
    pub fn new(kind: AbscissaKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Contract(
                "sweep abscissa must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !(p.1 >= 0.0)) {
            return Err(Error::Contract("rates must be non-negative".into()));
        }
        Ok(Self { kind, points })
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("abscissa,rate\n");
        for (x, y) in &self.points {
            s.push_str(&format_g9(*x));
            s.push(',');
            s.push_str(&format_g9(*y));
            s.push('\n');
        }
        s
    }
}

fn check_tau(pi: &BiphotonAmplitude, tau_fs: f64) -> Result<()> {
    let half_span = 0.5 * pi.layout.span_minus_fs();
    if !tau_fs.is_finite() || tau_fs.abs() > half_span {
        return Err(Error::Range(format!(
            "delay {tau_fs} fs exceeds half the t- grid span ({half_span:.1} fs)"
        )));
    }
    Ok(())
}

/// O(τ)/N.
pub fn normalized_overlap(pi: &BiphotonAmplitude, tau_fs: f64) -> Result<Complex64> {
    check_tau(pi, tau_fs)?;
    if tau_fs == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let n = pi.layout.n_minus;
    let shift = 2.0 * tau_fs / pi.layout.dt_minus;
    let whole = shift.floor();
    let frac = shift - whole;
    let k = whole as i64;
    let at = |row: &[Complex64], idx: i64| -> Complex64 {
        if idx >= 0 && (idx as usize) < n {
            row[idx as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for i in 0..pi.layout.n_plus {
        let row = pi.row(i);
        for (j, z) in row.iter().enumerate() {
            norm += z.norm_sqr();
            if z.norm_sqr() == 0.0 {
                continue;
            }
            let base = j as i64 + k;
            let shifted = at(row, base) * (1.0 - frac) + at(row, base + 1) * frac;
            acc += shifted * z.conj();
        }
    }
    if !(norm > 0.0) {
        return Err(Error::Domain("biphoton amplitude has zero norm".into()));
    }
    let o = acc / norm;
    // linear interpolation only shrinks the shifted copy; guard roundoff
    Ok(if o.norm() > 1.0 { o / o.norm() } else { o })
}

/// Normalized coincidence rate for one measurement setting.
pub fn coincidence_rate(pi: &BiphotonAmplitude, s: &MeasurementSetting) -> Result<f64> {
    let o = normalized_overlap(pi, s.tau_fs)?;
    Ok(rate_from_overlap(o, s))
}

fn rate_from_overlap(o: Complex64, s: &MeasurementSetting) -> f64 {
    let (t1, t2) = (s.theta1_deg.to_radians(), s.theta2_deg.to_radians());
    let a = t1.cos() * t2.cos();
    let b = t1.sin() * t2.sin();
    let cross = (Complex64::from_polar(1.0, -s.phi) * o).re;
    (a * a + b * b + 2.0 * a * b * cross).max(0.0)
}

/// Degree of indistinguishability ε(τ) = |O(τ)|/N.
pub fn werner_epsilon(pi: &BiphotonAmplitude, tau_fs: f64) -> Result<f64> {
    Ok(normalized_overlap(pi, tau_fs)?.norm().min(1.0))
}

/// Output polarization state at delay `tau_fs` for phase-plate setting `phi`.
/// The phase of the overlap enters the effective Bell phase as φ − arg O.
pub fn output_state(pi: &BiphotonAmplitude, tau_fs: f64, phi: f64) -> Result<TwoQubitState> {
    let o = normalized_overlap(pi, tau_fs)?;
    let eps = o.norm().min(1.0);
    let arg = if eps > 0.0 { o.arg() } else { 0.0 };
    partial_state(eps, phi - arg)
}

/// Smallest allowed spacing of delay samples in units of the t₋ grid step.
pub const MIN_TAU_STEP_IN_GRID_STEPS: f64 = 4.0;

pub fn sweep_delay(
    pi: &BiphotonAmplitude,
    tau_values: &[f64],
    theta1_deg: f64,
    theta2_deg: f64,
    phi: f64,
) -> Result<SweepCurve> {
    if tau_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract(
            "delay values must be strictly increasing".into(),
        ));
    }
    let min_step = tau_values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_step.is_finite()
        && pi.layout.dt_minus > (1.0 + 1e-9) * min_step / MIN_TAU_STEP_IN_GRID_STEPS
    {
        return Err(Error::Resolution(format!(
            "t- grid step {:.3} fs exceeds a quarter of the delay step {:.3} fs",
            pi.layout.dt_minus, min_step
        )));
    }
    let points = tau_values
        .par_iter()
        .map(|&tau| {
            let s = MeasurementSetting::new(tau, theta1_deg, theta2_deg, phi);
            coincidence_rate(pi, &s).map(|r| (tau, r))
        })
        .collect::<Result<Vec<_>>>()?;
    SweepCurve::new(AbscissaKind::DelayFs, points)
}

pub fn sweep_analyzer(
    pi: &BiphotonAmplitude,
    tau_fs: f64,
    theta1_deg: f64,
    theta2_values: &[f64],
    phi: f64,
) -> Result<SweepCurve> {
    if theta2_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract(
            "analyzer angles must be strictly increasing".into(),
        ));
    }
    let o = normalized_overlap(pi, tau_fs)?;
    let points = theta2_values
        .iter()
        .map(|&t2| {
            let s = MeasurementSetting::new(tau_fs, theta1_deg, t2, phi);
            (t2, rate_from_overlap(o, &s))
        })
        .collect();
    SweepCurve::new(AbscissaKind::AnalyzerDeg, points)
}

/// (max − min)/(max + min).
pub fn visibility(curve: &SweepCurve) -> Result<f64> {
    if curve.points.len() < 3 {
        return Err(Error::Contract(
            "visibility needs at least 3 samples".into(),
        ));
    }
    let max = curve.rates().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.rates().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return Err(Error::UndefinedVisibility(
            "curve is identically zero".into(),
        ));
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Peak,
    Dip,
}

/// Shape summary of a delay sweep around its interference feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayFeatures {
    pub kind: FeatureKind,
    pub baseline: f64,
    pub extremum_tau_fs: f64,
    pub extremum_rate: f64,
    /// Full width at half depth, linear interpolation between samples.
    pub fwhm_fs: f64,
    /// Base width from straight-line fits to the flanks (20–80 % of depth)
    /// extrapolated to the baseline.
    pub base_width_fs: f64,
    /// |extremum − baseline| / baseline.
    pub interference_visibility: f64,
}

fn line_fit_zero(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 || sxy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(mx - my / slope)
}

pub fn analyze_delay_curve(curve: &SweepCurve) -> Result<DelayFeatures> {
    let pts = &curve.points;
    if pts.len() < 5 {
        return Err(Error::Contract(
            "delay analysis needs at least 5 samples".into(),
        ));
    }
    let edge = (pts.len() / 20).max(1);
    let baseline = (pts[..edge].iter().chain(&pts[pts.len() - edge..]))
        .map(|p| p.1)
        .sum::<f64>()
        / (2 * edge) as f64;
    let excess: Vec<f64> = pts.iter().map(|p| p.1 - baseline).collect();
    let (imax, _) = excess
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty");
    let depth = excess[imax];
    if depth == 0.0 {
        return Err(Error::UndefinedVisibility("flat delay curve".into()));
    }
    let kind = if depth > 0.0 {
        FeatureKind::Peak
    } else {
        FeatureKind::Dip
    };
    let frac: Vec<f64> = excess.iter().map(|e| e / depth).collect();

    let crossing = |range: &mut dyn Iterator<Item = usize>, step: i64| -> Option<f64> {
        for i in range {
            let j = (i as i64 + step) as usize;
            if frac[j] < 0.5 {
                let t = (frac[i] - 0.5) / (frac[i] - frac[j]);
                return Some(pts[i].0 + t * (pts[j].0 - pts[i].0));
            }
        }
        None
    };
    let right = crossing(&mut (imax..pts.len() - 1), 1);
    let left = crossing(&mut (1..=imax).rev(), -1);
    let (left, right) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::Contract(
                "delay sweep does not reach half depth on both sides".into(),
            ))
        }
    };

    let flank = |idx: &mut dyn Iterator<Item = usize>| -> Vec<(f64, f64)> {
        idx.take_while(|&i| frac[i] > 0.05)
            .filter(|&i| (0.2..=0.8).contains(&frac[i]))
            .map(|i| (pts[i].0, frac[i]))
            .collect()
    };
    let right_flank = flank(&mut (imax..pts.len()));
    let left_flank = flank(&mut (0..=imax).rev());
    let base_width = match (line_fit_zero(&left_flank), line_fit_zero(&right_flank)) {
        (Some(l), Some(r)) => r - l,
        _ => f64::NAN,
    };

    Ok(DelayFeatures {
        kind,
        baseline,
        extremum_tau_fs: pts[imax].0,
        extremum_rate: pts[imax].1,
        fwhm_fs: right - left,
        base_width_fs: base_width,
        interference_visibility: if baseline > 0.0 {
            depth.abs() / baseline
        } else {
            f64::NAN
        },
    })
}

/// Evenly spaced values from `start` to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::Domain(format!(
            "invalid range {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{analytic_pi_cw, biphoton_from_setup};
    use crate::qstate::{coincidence_probability, concurrence};
    use crate::setup::SetupConfig;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cw_numeric() -> BiphotonAmplitude {
        biphoton_from_setup(&SetupConfig::cw_reference()).unwrap()
    }

    fn cw_analytic() -> (BiphotonAmplitude, f64) {
        let s = SetupConfig::cw_reference();
        let d = s.dispersion().unwrap();
        (analytic_pi_cw(&s, &d).unwrap(), d.walkoff_fs())
    }

    #[test]
    fn balanced_phase_pi_is_dark() {
        let pi = cw_numeric();
        let r = coincidence_rate(&pi, &MeasurementSetting::new(0.0, 45.0, 45.0, PI)).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn balanced_polarization_law() {
        let pi = cw_numeric();
        for &(t1, t2) in &[
            (0.0, 0.0),
            (10.0, 70.0),
            (45.0, -45.0),
            (30.0, 100.0),
            (-80.0, 5.0),
        ] {
            let r = coincidence_rate(&pi, &MeasurementSetting::new(0.0, t1, t2, 0.0)).unwrap();
            let expected = (t1 - t2).to_radians().cos().powi(2);
            assert_abs_diff_eq!(r, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn large_delay_is_incoherent() {
        let (pi, dl) = cw_analytic();
        let r = coincidence_rate(&pi, &MeasurementSetting::new(1.5 * dl, 45.0, 45.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-12);
        let pi = cw_numeric();
        let r = coincidence_rate(&pi, &MeasurementSetting::new(1.5 * dl, 45.0, 45.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 2e-3);
    }

    #[test]
    fn rectangle_overlap_oracle() {
        let (pi, dl) = cw_analytic();
        let dt = pi.layout.dt_minus;
        for k in 0..40 {
            let tau = k as f64 * 0.3 * dt;
            let eps = werner_epsilon(&pi, tau).unwrap();
            let expected = (1.0 - 2.0 * tau.abs() / dl).max(0.0);
            assert!(
                (eps - expected).abs() < 2.0 * dt / dl,
                "tau {tau}: {eps} vs {expected}"
            );
        }
        assert_eq!(werner_epsilon(&pi, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(werner_epsilon(&pi, dl).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quarter_walkoff_gives_half_entangled_state() {
        let (pi, dl) = cw_analytic();
        let rho = output_state(&pi, dl / 4.0, 0.0).unwrap();
        assert!((concurrence(&rho) - 0.5).abs() < 2.0 * pi.layout.dt_minus / dl);
    }

    #[test]
    fn zero_delay_state_is_bell_state() {
        let pi = biphoton_from_setup(&SetupConfig::pulsed_reference()).unwrap();
        let rho = output_state(&pi, 0.0, 0.0).unwrap();
        assert!(rho.max_element_distance(&TwoQubitState::phi_state(0.0)) < 1e-15);
    }

    #[test]
    fn rate_matches_state_probabilities() {
        let pi = cw_numeric();
        for &tau in &[0.0, 50.0, 185.0, 300.0, 900.0] {
            for &phi in &[0.0, 1.0] {
                let rho = output_state(&pi, tau, phi).unwrap();
                for &t1 in &[0.0, 30.0, 45.0, 100.0, -60.0] {
                    for &t2 in &[0.0, 20.0, -45.0, 135.0, 77.0] {
                        let r = coincidence_rate(&pi, &MeasurementSetting::new(tau, t1, t2, phi))
                            .unwrap();
                        let p = coincidence_probability(&rho, t1.to_radians(), t2.to_radians());
                        assert!((r - 2.0 * p).abs() <= 1e-6 * r.max(1e-12) + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn delay_out_of_range() {
        let pi = cw_numeric();
        let half = 0.5 * pi.layout.span_minus_fs();
        assert!(matches!(
            coincidence_rate(&pi, &MeasurementSetting::new(half * 1.01, 45.0, 45.0, 0.0)),
            Err(Error::Range(_))
        ));
        assert!(coincidence_rate(&pi, &MeasurementSetting::new(half, 45.0, 45.0, 0.0)).is_ok());
    }

    #[test]
    fn sweep_step_enforced() {
        let pi = cw_numeric();
        let dt = pi.layout.dt_minus;
        assert!(matches!(
            sweep_delay(&pi, &[0.0, 2.0 * dt, 4.0 * dt], 45.0, 45.0, 0.0),
            Err(Error::Resolution(_))
        ));
        assert!(sweep_delay(&pi, &[0.0, 4.0 * dt, 8.0 * dt], 45.0, 45.0, 0.0).is_ok());
        assert!(matches!(
            sweep_delay(&pi, &[0.0, -40.0], 45.0, 45.0, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn visibility_edge_cases() {
        let cos2 = SweepCurve::new(
            AbscissaKind::AnalyzerDeg,
            (0..=36)
                .map(|k| {
                    let t = k as f64 * 5.0;
                    (t, (45.0 - t).to_radians().cos().powi(2))
                })
                .collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(visibility(&cos2).unwrap(), 1.0, epsilon = 1e-12);
        let flat = SweepCurve::new(
            AbscissaKind::AnalyzerDeg,
            vec![(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)],
        )
        .unwrap();
        assert_eq!(visibility(&flat).unwrap(), 0.0);
        let zero = SweepCurve::new(
            AbscissaKind::AnalyzerDeg,
            vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            visibility(&zero),
            Err(Error::UndefinedVisibility(_))
        ));
    }

    #[test]
    fn partial_state_sweep_visibility_is_epsilon() {
        let rho = partial_state(0.9, 0.0).unwrap();
        let points = (0..36)
            .map(|k| {
                let t2 = k as f64 * 5.0;
                (t2, coincidence_probability(&rho, PI / 4.0, t2.to_radians()))
            })
            .collect();
        let c = SweepCurve::new(AbscissaKind::AnalyzerDeg, points).unwrap();
        assert_abs_diff_eq!(visibility(&c).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn triangle_features() {
        let (pi, dl) = cw_analytic();
        let taus = linspace_step(-600.0, 600.0, 25.0).unwrap();
        let c = sweep_delay(&pi, &taus, 45.0, 45.0, 0.0).unwrap();
        let f = analyze_delay_curve(&c).unwrap();
        assert_eq!(f.kind, FeatureKind::Peak);
        assert_abs_diff_eq!(f.baseline, 0.5, epsilon = 1e-9);
        assert!(
            (f.base_width_fs - dl).abs() < 0.01 * dl,
            "{} vs {dl}",
            f.base_width_fs
        );
        assert!((f.fwhm_fs - dl / 2.0).abs() < 0.02 * dl);
    }
}
