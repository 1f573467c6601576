//! Two-qubit polarization states and the entanglement measures used to
//! characterize them.
//!
//! Basis ordering is fixed everywhere as (HH, HV, VH, VV); the first letter
//! is the photon in beam 1 (detector D1), the second the photon in beam 2.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = -1e-10;
/// Eigenvalues below this are treated as exact zeros in `p log p`.
pub const LOG_CUTOFF: f64 = 1e-14;

pub type Matrix = Matrix4<Complex64>;

/// A validated 4x4 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    pub concurrence: f64,
    pub entanglement_of_formation: f64,
    pub normalized_entropy: f64,
    pub purity: f64,
}

impl TwoQubitState {
    /// Wraps `matrix` after checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: Matrix) -> Result<Self> {
        validate(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn from_pure(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("pure state amplitudes have zero norm".into()));
        }
        let v = Vector4::from_iterator(amplitudes.iter().map(|a| a / norm.sqrt()));
        Self::new(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: Matrix::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// |Φ±⟩ = (|HH⟩ + e^{iφ}|VV⟩)/√2 as a projector.
    pub fn phi_state(phi: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = [
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(s, phi),
        ];
        Self::from_pure(amps).expect("normalized Bell amplitudes")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        sorted_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    pub fn metrics(&self) -> StateMetrics {
        let c = concurrence(self);
        StateMetrics {
            concurrence: c,
            entanglement_of_formation: eof_from_concurrence(c),
            normalized_entropy: normalized_entropy(self),
            purity: self.purity(),
        }
    }

    pub fn max_element_distance(&self, other: &TwoQubitState) -> f64 {
        (self.matrix - other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn validate(m: &Matrix) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvariantViolation(
            "non-finite matrix element".into(),
        ));
    }
    let herm_err = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_err > HERMITIAN_TOL {
        return Err(Error::InvariantViolation(format!(
            "matrix is not Hermitian (max deviation {herm_err:.3e})"
        )));
    }
    let tr = m.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvariantViolation(format!(
            "trace is {tr}, expected 1"
        )));
    }
    let min_eig = sorted_eigenvalues(m)[0];
    if min_eig < PSD_TOL {
        return Err(Error::InvariantViolation(format!(
            "matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub(crate) fn sorted_eigenvalues(m: &Matrix) -> [f64; 4] {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals = [0.0; 4];
    vals.copy_from_slice(eig.eigenvalues.as_slice());
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Square root of a positive semidefinite Hermitian matrix; small negative
/// eigenvalues from roundoff are clipped to zero.
pub(crate) fn psd_sqrt(m: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let vecs = &eig.eigenvectors;
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    vecs * Matrix::from_diagonal(&roots) * vecs.adjoint()
}

fn spin_flip() -> Matrix {
    // sigma_y (x) sigma_y in the (HH, HV, VH, VV) basis
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Matrix::new(
        zero, zero, zero, -one, //
        zero, zero, one, zero, //
        zero, one, zero, zero, //
        -one, zero, zero, zero,
    )
}

/// ε|Φ_φ⟩⟨Φ_φ| + (1−ε)·½(|HH⟩⟨HH| + |VV⟩⟨VV|).
pub fn partial_state(epsilon: f64, phi: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if !phi.is_finite() {
        return Err(Error::Domain("phase must be finite".into()));
    }
    let mut m = Matrix::zeros();
    m[(0, 0)] = Complex64::new(0.5, 0.0);
    m[(3, 3)] = Complex64::new(0.5, 0.0);
    let coh = Complex64::from_polar(0.5 * epsilon, phi);
    // |Φ_φ⟩⟨Φ_φ| has e^{-iφ}/2 in (HH, VV) and e^{iφ}/2 in (VV, HH)
    m[(0, 3)] = coh.conj();
    m[(3, 0)] = coh;
    TwoQubitState::new(m)
}

/// ½(|HV⟩⟨HV| + |VH⟩⟨VH|): the state emerging from the crystal, before the
/// half-wave plate and polarizing beam splitter.
pub fn pre_concentrator_mixed_state() -> TwoQubitState {
    let mut m = Matrix::zeros();
    m[(1, 1)] = Complex64::new(0.5, 0.0);
    m[(2, 2)] = Complex64::new(0.5, 0.0);
    TwoQubitState { matrix: m }
}

/// Wootters concurrence. Uses the eigenvalues of the Hermitian matrix
/// √ρ ρ̃ √ρ, which coincide with those of ρ ρ̃.
pub fn concurrence(rho: &TwoQubitState) -> f64 {
    // With ρ = W W†, the λᵢ are the singular values of Wᵀ (σy⊗σy) W. This
    // avoids square roots of tiny eigenvalues, which cost ~1e-8 accuracy
    // on rank-deficient states.
    let eig = SymmetricEigen::new(hermitian_part(&rho.matrix));
    let weights = eig
        .eigenvalues
        .map(|p| Complex64::new(p.max(0.0).sqrt(), 0.0));
    let w = eig.eigenvectors * Matrix::from_diagonal(&weights);
    let t = w.transpose() * spin_flip() * w;
    let mut lambdas = [0.0; 4];
    lambdas.copy_from_slice(t.singular_values().as_slice());
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0)
}

fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    let x = 0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt());
    binary_entropy(x).clamp(0.0, 1.0)
}

pub fn entanglement_of_formation(rho: &TwoQubitState) -> f64 {
    eof_from_concurrence(concurrence(rho))
}

/// Von Neumann entropy in bits divided by its two-qubit maximum of 2.
pub fn normalized_entropy(rho: &TwoQubitState) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .iter()
        .filter(|&&l| l >= LOG_CUTOFF)
        .map(|&l| -l * l.log2())
        .sum();
    (s / 2.0).clamp(0.0, 1.0)
}

/// Analyzer unit vector cosθ|H⟩ + sinθ|V⟩.
fn analyzer(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// ⟨θ₁θ₂|ρ|θ₁θ₂⟩ for linear analyzers at `theta1`, `theta2` (radians).
pub fn coincidence_probability(rho: &TwoQubitState, theta1: f64, theta2: f64) -> f64 {
    let a = analyzer(theta1);
    let b = analyzer(theta2);
    let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut p = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            p += v[i] * v[j] * rho.matrix[(i, j)].re;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &TwoQubitState, sigma: &TwoQubitState) -> f64 {
    let root = psd_sqrt(&rho.matrix);
    let inner = root * sigma.matrix * root;
    let t: f64 = sorted_eigenvalues(&inner)
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    (t * t).clamp(0.0, 1.0)
}
