//! Inverted-split-ring photon modes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{from_db, ghz_to_angular, GHZ_TO_RAD_PER_S};
use crate::{Error, Result};

/// Equivalent LCR circuit of a ring resonator (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lumped {
    /// Inductance in H.
    pub l: f64,
    /// Capacitance in F.
    pub c: f64,
    /// Resistance in Ω.
    pub r: f64,
}

impl Lumped {
    pub fn angular_resonance(&self) -> f64 {
        1.0 / (self.l * self.c).sqrt()
    }

    /// β = R/(L·ω_n).
    pub fn damping(&self) -> f64 {
        self.r / (self.l * self.angular_resonance())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonMode {
    /// Mode index n (1-based in reports).
    pub label: usize,
    /// Resonance frequency in GHz.
    pub f_ghz: f64,
    /// Intrinsic damping β_in.
    pub beta_in: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lumped: Option<Lumped>,
}

impl PhotonMode {
    pub fn new(label: usize, f_ghz: f64, beta_in: f64) -> Result<Self> {
        let m = PhotonMode {
            label,
            f_ghz,
            beta_in,
            lumped: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Derives f_n and β_n from the circuit values.
    pub fn from_lumped(label: usize, lumped: Lumped) -> Result<Self> {
        if !(lumped.l > 0.0 && lumped.c > 0.0 && lumped.r >= 0.0) {
            return Err(Error::Config(format!(
                "mode {label}: lumped L, C must be positive and R non-negative"
            )));
        }
        let m = PhotonMode {
            label,
            f_ghz: lumped.angular_resonance() / GHZ_TO_RAD_PER_S,
            beta_in: lumped.damping(),
            lumped: Some(lumped),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_ghz > 0.0 && self.f_ghz.is_finite()) {
            return Err(Error::Config(format!(
                "mode {}: f_ghz must be positive, got {}",
                self.label, self.f_ghz
            )));
        }
        if !(self.beta_in >= 0.0 && self.beta_in.is_finite()) {
            return Err(Error::Config(format!(
                "mode {}: beta_in must be non-negative, got {}",
                self.label, self.beta_in
            )));
        }
        if let Some(lc) = &self.lumped {
            let f_lc = lc.angular_resonance() / GHZ_TO_RAD_PER_S;
            if ((f_lc - self.f_ghz) / self.f_ghz).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "mode {}: f_ghz = {} disagrees with 1/(2π·sqrt(LC)) = {f_lc}",
                    self.label, self.f_ghz
                )));
            }
            let beta = lc.damping();
            if (beta - self.beta_in).abs() > 1e-9 * beta.abs().max(1e-12) {
                return Err(Error::Config(format!(
                    "mode {}: beta_in = {} disagrees with R/(Lω) = {beta}",
                    self.label, self.beta_in
                )));
            }
        }
        Ok(())
    }

    /// ω_n in rad/s.
    pub fn omega(&self) -> f64 {
        ghz_to_angular(self.f_ghz)
    }
}

/// Relative amplitude σ (linear) and phase ψ of a photon mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonPhaseProfile {
    pub sigma: f64,
    /// Degrees, kept in (−360, 360].
    pub psi_deg: f64,
}

impl PhotonPhaseProfile {
    pub fn new(sigma: f64, psi_deg: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) || !psi_deg.is_finite() {
            return Err(Error::Config(format!(
                "phase profile needs sigma ≥ 0 and finite psi, got ({sigma}, {psi_deg})"
            )));
        }
        let mut psi = psi_deg % 360.0;
        if psi <= -360.0 {
            psi += 360.0;
        }
        Ok(PhotonPhaseProfile {
            sigma,
            psi_deg: psi,
        })
    }

    /// Profile from a dB amplitude, converted with 10^(dB/20).
    pub fn from_db(sigma_db: f64, psi_deg: f64) -> Result<Self> {
        Self::new(from_db(sigma_db), psi_deg)
    }

    pub fn same_phase(&self, other: &Self) -> bool {
        let d = (self.psi_deg - other.psi_deg).rem_euclid(360.0);
        d < 1e-9 || 360.0 - d < 1e-9
    }

    pub fn cos_psi(&self) -> f64 {
        self.psi_deg.to_radians().cos()
    }
}

/// Z_p = −(iL/ω)(ω² − ω_p² + 2iβωω_p).
pub fn isrr_impedance(omega: f64, mode: &PhotonMode) -> Result<Complex64> {
    let lc = mode.lumped.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "mode {}: impedance needs lumped L, C, R",
            mode.label
        ))
    })?;
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    let wp = lc.angular_resonance();
    let bracket = Complex64::new(omega * omega - wp * wp, 2.0 * mode.beta_in * omega * wp);
    Ok(Complex64::new(0.0, -lc.l / omega) * bracket)
}

/// ω̃_n = ω_n − i·β_in·ω_n.
pub fn photon_complex_frequency(mode: &PhotonMode) -> Complex64 {
    let w = mode.omega();
    Complex64::new(w, -mode.beta_in * w)
}

/// Measured three-ring device: 4.44/5.56/7.02 GHz with β = 2.3e-3/1.8e-3/2.1e-3.
pub fn default_modes() -> Vec<PhotonMode> {
    [(4.44, 2.3e-3), (5.56, 1.8e-3), (7.02, 2.1e-3)]
        .iter()
        .enumerate()
        .map(|(i, &(f, b))| PhotonMode::new(i + 1, f, b).expect("valid defaults"))
        .collect()
}

/// Per-mode amplitude/phase read off the bare three-ring spectrum
/// (−33.0 dB, 70°), (−20.8 dB, 170°), (−22.5 dB, −320°).
pub fn default_profiles() -> Vec<PhotonPhaseProfile> {
    [(-33.0, 70.0), (-20.8, 170.0), (-22.5, -320.0)]
        .iter()
        .map(|&(db, psi)| PhotonPhaseProfile::from_db(db, psi).expect("valid defaults"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lumped_mode(r: f64) -> PhotonMode {
        // L = 1 nH, C chosen for 5 GHz.
        let l = 1e-9;
        let w = ghz_to_angular(5.0);
        let c = 1.0 / (l * w * w);
        PhotonMode::from_lumped(1, Lumped { l, c, r }).unwrap()
    }

    #[test]
    fn impedance_vanishes_at_lossless_resonance() {
        let m = lumped_mode(0.0);
        let z = isrr_impedance(m.omega(), &m).unwrap();
        assert!(z.norm() < 1e-9 * 1e-9 * m.omega());
    }

    #[test]
    fn impedance_at_resonance_is_resistive() {
        let m = lumped_mode(0.5);
        let lc = m.lumped.unwrap();
        let wp = lc.angular_resonance();
        let z = isrr_impedance(wp, &m).unwrap();
        let expect = 2.0 * m.beta_in * lc.l * wp;
        assert!((z.re - expect).abs() < 1e-12 * expect);
        assert!(z.im.abs() < 1e-9 * expect);
        // 2βLω_p = 2R
        assert!((expect - 2.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn impedance_diverges_at_low_frequency() {
        let m = lumped_mode(0.5);
        let a = isrr_impedance(1e3, &m).unwrap().norm();
        let b = isrr_impedance(1.0, &m).unwrap().norm();
        assert!(b > 100.0 * a);
    }

    #[test]
    fn impedance_requires_lumped() {
        let m = PhotonMode::new(1, 4.44, 2.3e-3).unwrap();
        assert!(matches!(isrr_impedance(1e9, &m), Err(Error::Config(_))));
    }

    #[test]
    fn lumped_consistency_checked() {
        let mut m = lumped_mode(0.2);
        m.validate().unwrap();
        m.f_ghz *= 1.0 + 1e-6;
        assert!(m.validate().is_err());
        let mut m = lumped_mode(0.2);
        m.beta_in *= 1.01;
        assert!(m.validate().is_err());
    }

    #[test]
    fn complex_frequencies_of_default_modes() {
        let modes = default_modes();
        let w1 = photon_complex_frequency(&modes[0]);
        let e1 = -2.3e-3 * ghz_to_angular(4.44);
        assert!(((w1.im - e1) / e1).abs() < 1e-12);
        let w3 = photon_complex_frequency(&modes[2]);
        let e3 = -2.1e-3 * ghz_to_angular(7.02);
        assert!(((w3.im - e3) / e3).abs() < 1e-12);
        let lossless = PhotonMode::new(1, 4.44, 0.0).unwrap();
        assert_eq!(photon_complex_frequency(&lossless).im, 0.0);
    }

    #[test]
    fn invalid_modes_rejected() {
        assert!(PhotonMode::new(1, -1.0, 0.0).is_err());
        assert!(PhotonMode::new(1, 4.0, -1e-3).is_err());
    }

    #[test]
    fn profile_phase_wrapping() {
        let profiles = default_profiles();
        assert!((profiles[0].sigma - 10f64.powf(-33.0 / 20.0)).abs() < 1e-15);
        assert_eq!(profiles[2].psi_deg, -320.0);
        let a = PhotonPhaseProfile::new(1.0, 40.0).unwrap();
        let b = PhotonPhaseProfile::new(1.0, -320.0).unwrap();
        assert!(a.same_phase(&b));
        assert_eq!(PhotonPhaseProfile::new(1.0, 720.0).unwrap().psi_deg, 0.0);
        assert_eq!(PhotonPhaseProfile::new(1.0, 360.0).unwrap().psi_deg, 0.0);
        let d = |i: usize, j: usize| (profiles[i].psi_deg - profiles[j].psi_deg).rem_euclid(360.0);
        assert!((d(1, 0) - 100.0).abs() < 1e-12);
    }
}
