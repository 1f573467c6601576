//! Monte Carlo emulation of the detection chain and of two-qubit state
//! tomography with finite counting statistics.
//!
//! Randomness comes from ChaCha20 seeded with `rng_seed`; each physical
//! process reads its own ChaCha stream so that changing one rate leaves the
//! other processes' draws untouched:
//!
//! | stream | process                                           |
//! |--------|---------------------------------------------------|
//! | 0      | pair emission times, analyzer outcomes, detection, jitter |
//! | 1      | background events on D1                           |
//! | 2      | background events on D2                           |
//! | 3      | tomography counts                                 |

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Exp, Normal};

use crate::concentrator::MeasurementSetting;
use crate::csv::format_g9;
use crate::error::{Error, Result};
use crate::qstate::{coincidence_probability, Matrix, TwoQubitState};

pub const STREAM_PAIRS: u64 = 0;
pub const STREAM_BACKGROUND_D1: u64 = 1;
pub const STREAM_BACKGROUND_D2: u64 = 2;
pub const STREAM_TOMOGRAPHY: u64 = 3;

/// Default relative timing jitter between pair partners (ns, 1σ).
pub const DEFAULT_JITTER_NS: f64 = 0.3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub pair_rate_hz: f64,
    pub efficiency1: f64,
    pub efficiency2: f64,
    pub background1_hz: f64,
    pub background2_hz: f64,
    pub coincidence_window_ns: f64,
    pub tac_bin_ns: f64,
    pub duration_s: f64,
    pub jitter_ns: f64,
    pub rng_seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            pair_rate_hz: 1e5,
            efficiency1: 0.2,
            efficiency2: 0.2,
            background1_hz: 1e4,
            background2_hz: 1e4,
            coincidence_window_ns: 3.0,
            tac_bin_ns: 0.1,
            duration_s: 1.0,
            jitter_ns: DEFAULT_JITTER_NS,
            rng_seed: 0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pair_rate_hz", self.pair_rate_hz),
            ("background1_hz", self.background1_hz),
            ("background2_hz", self.background2_hz),
        ];
        for (name, r) in rates {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be finite and >= 0, got {r}"
                )));
            }
        }
        for (name, e) in [
            ("efficiency1", self.efficiency1),
            ("efficiency2", self.efficiency2),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {e}")));
            }
        }
        if !(self.coincidence_window_ns > 0.0) || !(self.tac_bin_ns > 0.0) {
            return Err(Error::Domain("window and TAC bin must be positive".into()));
        }
        if self.coincidence_window_ns < self.tac_bin_ns {
            return Err(Error::Domain(
                "coincidence window must be at least one TAC bin".into(),
            ));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Domain("duration must be positive".into()));
        }
        if !(self.jitter_ns >= 0.0) || !self.jitter_ns.is_finite() {
            return Err(Error::Domain("jitter must be >= 0".into()));
        }
        Ok(())
    }

    pub fn duration_ns(&self) -> f64 {
        self.duration_s * 1e9
    }

    /// Mean number of true coincidences for outcome probability `p`.
    pub fn expected_true_coincidences(&self, p: f64) -> f64 {
        self.pair_rate_hz * self.efficiency1 * self.efficiency2 * p * self.duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Pair,
    Background,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::D1 => "D1",
            Detector::D2 => "D2",
        })
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Pair => "pair",
            Origin::Background => "background",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub detector: Detector,
    pub time_ns: f64,
    pub origin: Origin,
}

pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut s = String::from("detector,time_ns,origin\n");
    for e in events {
        s.push_str(&format!(
            "{},{},{}\n",
            e.detector,
            format_g9(e.time_ns),
            e.origin
        ));
    }
    s
}

fn poisson_times(rng: &mut ChaCha20Rng, rate_hz: f64, duration_ns: f64) -> Vec<f64> {
    if rate_hz <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_hz * 1e-9).expect("positive rate");
    let mut t = 0.0;
    let mut out = Vec::with_capacity((rate_hz * duration_ns * 1e-9 * 1.1) as usize + 8);
    loop {
        t += exp.sample(rng);
        if t > duration_ns {
            return out;
        }
        out.push(t);
    }
}

/// Time-ordered detection events for state `rho` analysed at the angles in
/// `setting` (the delay and phase are already encoded in `rho`).
pub fn simulate_events(
    rho: &TwoQubitState,
    setting: &MeasurementSetting,
    cfg: &DetectionConfig,
) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    let t1 = setting.theta1_deg.to_radians();
    let t2 = setting.theta2_deg.to_radians();
    let perp = std::f64::consts::FRAC_PI_2;
    let p_pp = coincidence_probability(rho, t1, t2);
    let p_pf = coincidence_probability(rho, t1, t2 + perp);
    let p_fp = coincidence_probability(rho, t1 + perp, t2);
    let duration = cfg.duration_ns();

    let mut events = Vec::new();
    let mut rng = stream_rng(cfg.rng_seed, STREAM_PAIRS);
    let jitter = Normal::new(0.0, cfg.jitter_ns).expect("finite jitter");
    for t in poisson_times(&mut rng, cfg.pair_rate_hz, duration) {
        let u: f64 = rng.random();
        let (pass1, pass2) = if u < p_pp {
            (true, true)
        } else if u < p_pp + p_pf {
            (true, false)
        } else if u < p_pp + p_pf + p_fp {
            (false, true)
        } else {
            (false, false)
        };
        let det1 = pass1 && rng.random::<f64>() < cfg.efficiency1;
        let det2 = pass2 && rng.random::<f64>() < cfg.efficiency2;
        if det1 {
            events.push(EventRecord {
                detector: Detector::D1,
                time_ns: t,
                origin: Origin::Pair,
            });
        }
        if det2 {
            let t2 = t + jitter.sample(&mut rng);
            if (0.0..=duration).contains(&t2) {
                events.push(EventRecord {
                    detector: Detector::D2,
                    time_ns: t2,
                    origin: Origin::Pair,
                });
            }
        }
    }
    for (det, stream, rate) in [
        (Detector::D1, STREAM_BACKGROUND_D1, cfg.background1_hz),
        (Detector::D2, STREAM_BACKGROUND_D2, cfg.background2_hz),
    ] {
        let mut rng = stream_rng(cfg.rng_seed, stream);
        events.extend(
            poisson_times(&mut rng, rate, duration)
                .into_iter()
                .map(|t| EventRecord {
                    detector: det,
                    time_ns: t,
                    origin: Origin::Background,
                }),
        );
    }
    events.sort_by(|a, b| {
        a.time_ns
            .total_cmp(&b.time_ns)
            .then(a.detector.cmp(&b.detector))
    });
    Ok(events)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceReport {
    pub bin_centers_ns: Vec<f64>,
    /// Counts of t(D2) − t(D1) per TAC bin over [−window, +window].
    pub counts: Vec<u64>,
    pub singles1: u64,
    pub singles2: u64,
    /// All D1/D2 pairs with |t(D2) − t(D1)| ≤ window.
    pub in_window: u64,
    /// S₁·S₂·2w / T.
    pub accidental_estimate: f64,
}

impl CoincidenceReport {
    pub fn true_estimate(&self) -> f64 {
        self.in_window as f64 - self.accidental_estimate
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("bin_center_ns,count\n");
        for (c, n) in self.bin_centers_ns.iter().zip(&self.counts) {
            s.push_str(&format!("{},{}\n", format_g9(*c), n));
        }
        s
    }
}

/// TAC/MCA emulation: histogram of D2−D1 delays within the coincidence window.
pub fn coincidence_histogram(
    events: &[EventRecord],
    cfg: &DetectionConfig,
) -> Result<CoincidenceReport> {
    cfg.validate()?;
    if events.windows(2).any(|w| w[1].time_ns < w[0].time_ns) {
        return Err(Error::Contract("event stream is not sorted by time".into()));
    }
    let w = cfg.coincidence_window_ns;
    let n_bins = ((2.0 * w / cfg.tac_bin_ns).round() as usize).max(1);
    let bin = 2.0 * w / n_bins as f64;
    let mut counts = vec![0u64; n_bins];

    let d1: Vec<f64> = events
        .iter()
        .filter(|e| e.detector == Detector::D1)
        .map(|e| e.time_ns)
        .collect();
    let d2: Vec<f64> = events
        .iter()
        .filter(|e| e.detector == Detector::D2)
        .map(|e| e.time_ns)
        .collect();

    let mut in_window = 0u64;
    let mut start = 0usize;
    for &t1 in &d1 {
        while start < d2.len() && d2[start] < t1 - w {
            start += 1;
        }
        for &t2 in d2[start..].iter().take_while(|&&t2| t2 <= t1 + w) {
            let dt = t2 - t1;
            let idx = (((dt + w) / bin).floor() as usize).min(n_bins - 1);
            counts[idx] += 1;
            in_window += 1;
        }
    }
    let singles1 = d1.len() as u64;
    let singles2 = d2.len() as u64;
    let accidental_estimate = singles1 as f64 * singles2 as f64 * 2.0 * w / cfg.duration_ns();
    Ok(CoincidenceReport {
        bin_centers_ns: (0..n_bins).map(|k| -w + (k as f64 + 0.5) * bin).collect(),
        counts,
        singles1,
        singles2,
        in_window,
        accidental_estimate,
    })
}

/// Single-photon tomography settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    H,
    V,
    D,
    L,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::H, Basis::V, Basis::D, Basis::L];

    pub fn vector(self) -> [Complex64; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        match self {
            Basis::H => [r(1.0), r(0.0)],
            Basis::V => [r(0.0), r(1.0)],
            Basis::D => [r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)],
            Basis::L => [r(FRAC_1_SQRT_2), Complex64::new(0.0, FRAC_1_SQRT_2)],
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::H => "H",
            Basis::V => "V",
            Basis::D => "D",
            Basis::L => "L",
        })
    }
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "H" => Ok(Basis::H),
            "V" => Ok(Basis::V),
            "D" => Ok(Basis::D),
            "L" => Ok(Basis::L),
            other => Err(format!("unknown basis `{other}`")),
        }
    }
}

fn product_vector(a: Basis, b: Basis) -> [Complex64; 4] {
    let (u, v) = (a.vector(), b.vector());
    [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]]
}

/// ⟨ab|ρ|ab⟩ for product setting (a, b).
pub fn setting_probability(rho: &TwoQubitState, a: Basis, b: Basis) -> f64 {
    let v = product_vector(a, b);
    let m = rho.matrix();
    let mut p = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            p += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    p.re.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    /// counts[a][b] for bases indexed H, V, D, L.
    pub counts: [[u64; 4]; 4],
    pub total_per_setting: u64,
}

impl CountTable {
    pub fn get(&self, a: Basis, b: Basis) -> u64 {
        self.counts[a.index()][b.index()]
    }

    pub fn frequencies(&self) -> Result<[[f64; 4]; 4]> {
        if self.total_per_setting == 0 {
            return Err(Error::Domain("tomography totals are zero".into()));
        }
        if self
            .counts
            .iter()
            .flatten()
            .any(|&c| c > self.total_per_setting)
        {
            return Err(Error::Domain("count exceeds total per setting".into()));
        }
        let total = self.total_per_setting as f64;
        Ok(self.counts.map(|row| row.map(|c| c as f64 / total)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("basis1,basis2,count,total\n");
        for a in Basis::ALL {
            for b in Basis::ALL {
                s.push_str(&format!(
                    "{a},{b},{},{}\n",
                    self.get(a, b),
                    self.total_per_setting
                ));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, rows) = crate::csv::parse_csv(text).map_err(Error::Contract)?;
        if header != ["basis1", "basis2", "count", "total"] {
            return Err(Error::Contract("unexpected count table header".into()));
        }
        let mut counts = [[u64::MAX; 4]; 4];
        let mut total = None;
        for row in rows {
            let a: Basis = row[0].parse().map_err(Error::Contract)?;
            let b: Basis = row[1].parse().map_err(Error::Contract)?;
            let n: u64 = row[2]
                .parse()
                .map_err(|_| Error::Contract("bad count".into()))?;
            let t: u64 = row[3]
                .parse()
                .map_err(|_| Error::Contract("bad total".into()))?;
            if *total.get_or_insert(t) != t {
                return Err(Error::Contract("inconsistent totals".into()));
            }
            counts[a.index()][b.index()] = n;
        }
        if counts.iter().flatten().any(|&c| c == u64::MAX) {
            return Err(Error::Contract("count table is missing settings".into()));
        }
        Ok(Self {
            counts,
            total_per_setting: total.unwrap_or(0),
        })
    }
}

/// Binomial(shots, ⟨P_ab⟩) counts for all 16 settings.
pub fn tomography_counts(rho: &TwoQubitState, shots: u64, seed: u64) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::Domain("shots per setting must be positive".into()));
    }
    let mut rng = stream_rng(seed, STREAM_TOMOGRAPHY);
    let mut counts = [[0u64; 4]; 4];
    for a in Basis::ALL {
        for b in Basis::ALL {
            let p = setting_probability(rho, a, b);
            let dist = Binomial::new(shots, p)
                .map_err(|e| Error::Internal(format!("binomial({shots}, {p}): {e}")))?;
            counts[a.index()][b.index()] = dist.sample(&mut rng);
        }
    }
    Ok(CountTable {
        counts,
        total_per_setting: shots,
    })
}

/// Rows map vec(ρ) (row-major) to the 16 setting probabilities.
fn design_matrix() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(16, 16);
    for a in Basis::ALL {
        for b in Basis::ALL {
            let s = 4 * a.index() + b.index();
            let v = product_vector(a, b);
            // Tr(P ρ) = Σ_ij conj(v_i) ρ_ij v_j
            for i in 0..4 {
                for j in 0..4 {
                    m[(s, 4 * i + j)] = v[i].conj() * v[j];
                }
            }
        }
    }
    m
}

/// Linear inversion of setting frequencies followed by projection onto the
/// physical states (negative eigenvalues clipped, trace renormalized).
pub fn reconstruct_from_frequencies(freq: &[[f64; 4]; 4]) -> Result<TwoQubitState> {
    let lu = design_matrix().lu();
    let rhs = DVector::from_iterator(16, freq.iter().flatten().map(|&f| Complex64::new(f, 0.0)));
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("tomography design matrix is singular".into()))?;
    let mut raw = Matrix::zeros();
    for i in 0..4 {
        for j in 0..4 {
            raw[(i, j)] = x[4 * i + j];
        }
    }
    let herm = (raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let trace: f64 = clipped.iter().sum();
    if !(trace > 0.0) {
        return Err(Error::Domain(
            "reconstructed matrix has no positive part".into(),
        ));
    }
    let diag = clipped.map(|l| Complex64::new(l / trace, 0.0));
    let v = &eig.eigenvectors;
    let mut rho = v * Matrix::from_diagonal(&diag) * v.adjoint();
    // exact Hermiticity after the products
    rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = rho.trace().re;
    rho /= Complex64::new(tr, 0.0);
    TwoQubitState::new(rho)
}

pub fn reconstruct_state(counts: &CountTable) -> Result<TwoQubitState> {
    reconstruct_from_frequencies(&counts.frequencies()?)
}

/// Exact setting probabilities of `rho` (noiseless tomography data).
pub fn exact_frequencies(rho: &TwoQubitState) -> [[f64; 4]; 4] {
    let mut f = [[0.0; 4]; 4];
    for a in Basis::ALL {
        for b in Basis::ALL {
            f[a.index()][b.index()] = setting_probability(rho, a, b);
        }
    }
    f
}

/// CSV of a density matrix: `row,col,re,im` with basis labels.
pub fn state_to_csv(rho: &TwoQubitState) -> String {
    use crate::qstate::BASIS_LABELS;
    let mut s = String::from("row,col,re,im\n");
    for (i, row) in BASIS_LABELS.iter().enumerate() {
        for (j, col) in BASIS_LABELS.iter().enumerate() {
            let z = rho.element(i, j);
            s.push_str(&format!(
                "{},{},{},{}\n",
                row,
                col,
                format_g9(z.re),
                format_g9(z.im)
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::partial_state;
    use approx::assert_abs_diff_eq;

    fn setting(t1: f64, t2: f64) -> MeasurementSetting {
        MeasurementSetting::new(0.0, t1, t2, 0.0)
    }

    #[test]
    fn zero_efficiency_leaves_background_only() {
        let cfg = DetectionConfig {
            efficiency1: 0.0,
            duration_s: 0.05,
            ..DetectionConfig::default()
        };
        let ev =
            simulate_events(&TwoQubitState::phi_state(0.0), &setting(45.0, 45.0), &cfg).unwrap();
        assert!(ev
            .iter()
            .filter(|e| e.detector == Detector::D1)
            .all(|e| e.origin == Origin::Background));
        assert!(ev
            .iter()
            .any(|e| e.detector == Detector::D2 && e.origin == Origin::Pair));
    }

    #[test]
    fn events_sorted_and_in_range() {
        let cfg = DetectionConfig {
            duration_s: 0.01,
            ..DetectionConfig::default()
        };
        let ev =
            simulate_events(&TwoQubitState::phi_state(0.0), &setting(45.0, 45.0), &cfg).unwrap();
        assert!(ev.windows(2).all(|w| w[0].time_ns <= w[1].time_ns));
        assert!(ev
            .iter()
            .all(|e| (0.0..=cfg.duration_ns()).contains(&e.time_ns)));
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = DetectionConfig {
            duration_s: 0.01,
            rng_seed: 42,
            ..DetectionConfig::default()
        };
        let rho = partial_state(0.4, 0.0).unwrap();
        let a = simulate_events(&rho, &setting(10.0, 80.0), &cfg).unwrap();
        let b = simulate_events(&rho, &setting(10.0, 80.0), &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_events(
            &rho,
            &setting(10.0, 80.0),
            &DetectionConfig {
                rng_seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a, c);
        assert_eq!(
            tomography_counts(&rho, 1000, 9).unwrap(),
            tomography_counts(&rho, 1000, 9).unwrap()
        );
    }

    #[test]
    fn empty_stream_gives_zero_histogram() {
        let cfg = DetectionConfig::default();
        let r = coincidence_histogram(&[], &cfg).unwrap();
        assert_eq!(r.counts.len(), 60);
        assert!(r.counts.iter().all(|&c| c == 0));
        assert_eq!(r.in_window, 0);
        assert_eq!(r.accidental_estimate, 0.0);
    }

    #[test]
    fn unsorted_stream_rejected() {
        let ev = vec![
            EventRecord {
                detector: Detector::D1,
                time_ns: 5.0,
                origin: Origin::Pair,
            },
            EventRecord {
                detector: Detector::D2,
                time_ns: 1.0,
                origin: Origin::Pair,
            },
        ];
        assert!(matches!(
            coincidence_histogram(&ev, &DetectionConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn histogram_matches_brute_force_pairing() {
        let cfg = DetectionConfig {
            pair_rate_hz: 2e7,
            background1_hz: 5e7,
            background2_hz: 5e7,
            efficiency1: 0.5,
            efficiency2: 0.5,
            duration_s: 2e-6,
            rng_seed: 7,
            ..DetectionConfig::default()
        };
        let ev =
            simulate_events(&TwoQubitState::phi_state(0.0), &setting(45.0, 45.0), &cfg).unwrap();
        let r = coincidence_histogram(&ev, &cfg).unwrap();
        let mut brute = 0u64;
        for a in ev.iter().filter(|e| e.detector == Detector::D1) {
            for b in ev.iter().filter(|e| e.detector == Detector::D2) {
                if (b.time_ns - a.time_ns).abs() <= cfg.coincidence_window_ns {
                    brute += 1;
                }
            }
        }
        assert!(brute > 0);
        assert_eq!(r.in_window, brute);
        assert_eq!(r.counts.iter().sum::<u64>(), brute);
    }

    #[test]
    fn product_state_tomography_counts() {
        let mut m = Matrix::zeros();
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        let hh = TwoQubitState::new(m).unwrap();
        let t = tomography_counts(&hh, 5000, 1).unwrap();
        assert_eq!(t.get(Basis::H, Basis::H), 5000);
        for b in Basis::ALL {
            assert_eq!(t.get(Basis::V, b), 0);
            assert_eq!(t.get(b, Basis::V), 0);
        }
    }

    #[test]
    fn noiseless_inversion_is_exact() {
        for rho in [
            partial_state(0.3, 0.7).unwrap(),
            TwoQubitState::phi_state(0.0),
            TwoQubitState::maximally_mixed(),
            crate::qstate::pre_concentrator_mixed_state(),
        ] {
            let back = reconstruct_from_frequencies(&exact_frequencies(&rho)).unwrap();
            assert!(back.max_element_distance(&rho) < 1e-10);
        }
    }

    #[test]
    fn zero_totals_rejected() {
        let t = CountTable {
            counts: [[0; 4]; 4],
            total_per_setting: 0,
        };
        assert!(matches!(reconstruct_state(&t), Err(Error::Domain(_))));
        assert!(matches!(
            tomography_counts(&TwoQubitState::maximally_mixed(), 0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn count_table_csv_round_trip() {
        let t = tomography_counts(&partial_state(0.5, 0.0).unwrap(), 1000, 3).unwrap();
        assert_eq!(CountTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn dd_probability_oracle() {
        // ⟨DD|ρ(ε)|DD⟩ = ¼ + ε/4 for the HH/VV mixture with φ = 0
        for eps in [0.0, 0.5, 1.0] {
            let rho = partial_state(eps, 0.0).unwrap();
            assert_abs_diff_eq!(
                setting_probability(&rho, Basis::D, Basis::D),
                0.25 + eps / 4.0,
                epsilon = 1e-14
            );
        }
    }
}
