//! Refractive indices and first-order group delays of the down-conversion
//! crystal.
//!
//! BBO dispersion uses the Sellmeier form
//! `n² = A + B/(λ² − C) − D·λ²` (λ in µm) with the coefficients of
//! K. Kato, IEEE J. Quantum Electron. 22, 1013 (1986), also tabulated by
//! Eimerl et al., J. Appl. Phys. 62, 1968 (1987).
//!
//! Type-II phase matching: the pump and one down-converted photon travel as
//! e-rays, the other photon as an o-ray. Group velocities are `c / n_g` with
//! `n_g = n − λ dn/dλ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792_458;

pub const SELLMEIER_MIN_NM: f64 = 200.0;
pub const SELLMEIER_MAX_NM: f64 = 2600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Bbo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ray {
    Ordinary,
    Extraordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sellmeier {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Sellmeier {
    fn n(&self, um: f64) -> f64 {
        let l2 = um * um;
        (self.a + self.b / (l2 - self.c) - self.d * l2).sqrt()
    }

    /// dn/dλ in 1/µm.
    fn dn_dlambda(&self, um: f64) -> f64 {
        let l2 = um * um;
        let denom = l2 - self.c;
        let dn2 = -2.0 * self.b * um / (denom * denom) - 2.0 * self.d * um;
        dn2 / (2.0 * self.n(um))
    }
}

const BBO_ORDINARY: Sellmeier = Sellmeier {
    a: 2.7359,
    b: 0.01878,
    c: 0.01822,
    d: 0.01354,
};

const BBO_EXTRAORDINARY: Sellmeier = Sellmeier {
    a: 2.3753,
    b: 0.01224,
    c: 0.01667,
    d: 0.01516,
};

impl Material {
    fn coefficients(self) -> (Sellmeier, Sellmeier) {
        match self {
            Material::Bbo => (BBO_ORDINARY, BBO_EXTRAORDINARY),
        }
    }

    /// Index and its wavelength derivative (per nm) for a ray at
    /// `angle_deg` from the optic axis.
    pub fn index_and_slope(
        self,
        wavelength_nm: f64,
        ray: Ray,
        angle_deg: f64,
    ) -> Result<(f64, f64)> {
        if !(SELLMEIER_MIN_NM..=SELLMEIER_MAX_NM).contains(&wavelength_nm) {
            return Err(Error::Domain(format!(
                "wavelength {wavelength_nm} nm outside Sellmeier range [{SELLMEIER_MIN_NM}, {SELLMEIER_MAX_NM}] nm"
            )));
        }
        let um = wavelength_nm * 1e-3;
        let (o, e) = self.coefficients();
        let n_o = o.n(um);
        let dn_o = o.dn_dlambda(um) * 1e-3;
        match ray {
            Ray::Ordinary => Ok((n_o, dn_o)),
            Ray::Extraordinary => {
                if !angle_deg.is_finite() {
                    return Err(Error::Domain("angle must be finite".into()));
                }
                let n_e = e.n(um);
                let dn_e = e.dn_dlambda(um) * 1e-3;
                let th = angle_deg.to_radians();
                let (s2, c2) = (th.sin().powi(2), th.cos().powi(2));
                // 1/n(θ)² = cos²θ/n_o² + sin²θ/n_e²
                let inv = c2 / (n_o * n_o) + s2 / (n_e * n_e);
                let n = inv.powf(-0.5);
                let dinv = -2.0 * c2 * dn_o / n_o.powi(3) - 2.0 * s2 * dn_e / n_e.powi(3);
                let dn = -0.5 * inv.powf(-1.5) * dinv;
                Ok((n, dn))
            }
        }
    }

    pub fn refractive_index(self, wavelength_nm: f64, ray: Ray, angle_deg: f64) -> Result<f64> {
        self.index_and_slope(wavelength_nm, ray, angle_deg)
            .map(|(n, _)| n)
    }

    /// Group index `n − λ dn/dλ`.
    pub fn group_index(self, wavelength_nm: f64, ray: Ray, angle_deg: f64) -> Result<f64> {
        let (n, dn) = self.index_and_slope(wavelength_nm, ray, angle_deg)?;
        Ok(n - wavelength_nm * dn)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Material::Bbo => f.write_str("BBO"),
        }
    }
}

impl FromStr for Material {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BBO" => Ok(Material::Bbo),
            other => Err(format!(
                "unsupported crystal material `{other}` (supported: BBO)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams {
    pub material: Material,
    pub length_mm: f64,
    pub phase_matching_angle_deg: f64,
    pub cut: Cut,
}

impl CrystalParams {
    pub fn bbo(length_mm: f64, phase_matching_angle_deg: f64) -> Result<Self> {
        let c = Self {
            material: Material::Bbo,
            length_mm,
            phase_matching_angle_deg,
            cut: Cut::TypeII,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0) || !self.length_mm.is_finite() {
            return Err(Error::Domain(format!(
                "crystal length must be positive, got {} mm",
                self.length_mm
            )));
        }
        let a = self.phase_matching_angle_deg;
        if !(a > 0.0 && a < 90.0) {
            return Err(Error::Domain(format!(
                "phase-matching angle must lie in (0, 90) degrees, got {a}"
            )));
        }
        Ok(())
    }
}

/// First-order dispersion parameters of a type-II crystal at a degenerate
/// operating point. Inverse velocities are in fs/mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSummary {
    pub n_o: f64,
    pub n_e_effective: f64,
    /// Group velocities in mm/fs.
    pub u_p: f64,
    pub u_o: f64,
    pub u_e: f64,
    /// `1/u_o − 1/u_e`, fs/mm.
    pub d: f64,
    /// `1/u_p − (1/u_o + 1/u_e)/2`, fs/mm.
    pub d_plus: f64,
    pub length_mm: f64,
}

impl DispersionSummary {
    /// Total o/e group-delay walk-off `D·L` in fs; the biphoton correlation width.
    pub fn walkoff_fs(&self) -> f64 {
        self.d * self.length_mm
    }

    pub fn inv_u_p(&self) -> f64 {
        1.0 / self.u_p
    }

    pub fn inv_u_o(&self) -> f64 {
        1.0 / self.u_o
    }

    pub fn inv_u_e(&self) -> f64 {
        1.0 / self.u_e
    }
}

fn group_velocity_mm_per_fs(n_g: f64) -> f64 {
    C_NM_PER_FS * 1e-6 / n_g
}

/// Relative tolerance on `down_center ≈ 2·pump_center`.
const DEGENERACY_TOL: f64 = 1e-3;

pub fn dispersion_summary(
    crystal: &CrystalParams,
    pump_center_nm: f64,
    down_center_nm: f64,
) -> Result<DispersionSummary> {
    crystal.validate()?;
    if ((down_center_nm - 2.0 * pump_center_nm) / down_center_nm).abs() > DEGENERACY_TOL {
        return Err(Error::Domain(format!(
            "down-conversion centre {down_center_nm} nm is not degenerate with pump {pump_center_nm} nm"
        )));
    }
    let m = crystal.material;
    let angle = crystal.phase_matching_angle_deg;
    let n_o = m.refractive_index(down_center_nm, Ray::Ordinary, angle)?;
    let n_e_effective = m.refractive_index(down_center_nm, Ray::Extraordinary, angle)?;
    let u_p = group_velocity_mm_per_fs(m.group_index(pump_center_nm, Ray::Extraordinary, angle)?);
    let u_o = group_velocity_mm_per_fs(m.group_index(down_center_nm, Ray::Ordinary, angle)?);
    let u_e = group_velocity_mm_per_fs(m.group_index(down_center_nm, Ray::Extraordinary, angle)?);
    let d = 1.0 / u_o - 1.0 / u_e;
    if d == 0.0 {
        return Err(Error::Domain("vanishing o/e group-delay mismatch".into()));
    }
    let d_plus = 1.0 / u_p - 0.5 * (1.0 / u_o + 1.0 / u_e);
    Ok(DispersionSummary {
        n_o,
        n_e_effective,
        u_p,
        u_o,
        u_e,
        d,
        d_plus,
        length_mm: crystal.length_mm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ordinary_index_at_702nm() {
        // hand evaluation: λ² = 0.49308; n² = 2.7359 + 0.01878/0.47486 − 0.01354·0.49308
        let l2 = 0.7022f64 * 0.7022;
        let hand = (2.7359 + 0.01878 / (l2 - 0.01822) - 0.01354 * l2).sqrt();
        let n = Material::Bbo
            .refractive_index(702.2, Ray::Ordinary, 0.0)
            .unwrap();
        assert_relative_eq!(n, hand, max_relative = 1e-14);
        assert!((n - 1.665).abs() < 2e-3, "n_o = {n}");
    }

    #[test]
    fn extraordinary_limits() {
        for &l in &[400.0, 702.2, 1064.0] {
            let principal = BBO_EXTRAORDINARY.n(l * 1e-3);
            let n90 = Material::Bbo
                .refractive_index(l, Ray::Extraordinary, 90.0)
                .unwrap();
            assert_relative_eq!(n90, principal, max_relative = 1e-14);
            let n0 = Material::Bbo
                .refractive_index(l, Ray::Extraordinary, 0.0)
                .unwrap();
            let no = Material::Bbo
                .refractive_index(l, Ray::Ordinary, 0.0)
                .unwrap();
            assert_relative_eq!(n0, no, max_relative = 1e-14);
        }
    }

    #[test]
    fn out_of_range_wavelength() {
        assert!(matches!(
            Material::Bbo.refractive_index(150.0, Ray::Ordinary, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(Material::Bbo
            .refractive_index(2700.0, Ray::Extraordinary, 40.0)
            .is_err());
    }

    #[test]
    fn analytic_slope_matches_finite_difference() {
        let h = 0.01;
        for &ray in &[Ray::Ordinary, Ray::Extraordinary] {
            for &l in &[351.1, 390.0, 702.2, 780.0, 1500.0] {
                let (_, slope) = Material::Bbo.index_and_slope(l, ray, 43.5).unwrap();
                let up = Material::Bbo.refractive_index(l + h, ray, 43.5).unwrap();
                let dn = Material::Bbo.refractive_index(l - h, ray, 43.5).unwrap();
                let fd = (up - dn) / (2.0 * h);
                assert_relative_eq!(slope, fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn index_decreasing_in_visible() {
        for &ray in &[Ray::Ordinary, Ray::Extraordinary] {
            let mut prev = f64::INFINITY;
            for k in 0..=500 {
                let l = 400.0 + k as f64;
                let n = Material::Bbo.refractive_index(l, ray, 49.2).unwrap();
                assert!(n < prev && n > 1.0 && n < 3.0);
                prev = n;
            }
        }
    }

    #[test]
    fn cw_walkoff_anchor() {
        let crystal = CrystalParams::bbo(3.0, 49.2).unwrap();
        let s = dispersion_summary(&crystal, 351.1, 702.2).unwrap();
        assert!(
            (s.walkoff_fs() - 742.0).abs() / 742.0 < 0.05,
            "D·L = {}",
            s.walkoff_fs()
        );
        assert!(s.u_p > 0.0 && s.u_o > 0.0 && s.u_e > 0.0);
        assert!(s.d > 0.0);
    }

    #[test]
    fn walkoff_linear_in_length() {
        let a = dispersion_summary(&CrystalParams::bbo(3.0, 43.5).unwrap(), 390.0, 780.0).unwrap();
        let b = dispersion_summary(&CrystalParams::bbo(6.0, 43.5).unwrap(), 390.0, 780.0).unwrap();
        assert_eq!(a.d, b.d);
        assert_eq!(2.0 * a.walkoff_fs(), b.walkoff_fs());
    }

    #[test]
    fn rejects_bad_crystal_and_non_degenerate() {
        assert!(CrystalParams::bbo(0.0, 40.0).is_err());
        assert!(CrystalParams::bbo(1.0, 90.0).is_err());
        let c = CrystalParams::bbo(1.0, 40.0).unwrap();
        assert!(dispersion_summary(&c, 390.0, 800.0).is_err());
    }
}
