//! Uniform-mode ferromagnetic resonance of the YIG film.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{ghz_to_angular, GHZ_TO_RAD_PER_S};
use crate::{Error, Result};

/// Static field μ0H in tesla. Always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FieldPoint(f64);

impl FieldPoint {
    pub fn new(mu0_h: f64) -> Result<Self> {
        if !(mu0_h >= 0.0) || !mu0_h.is_finite() {
            return Err(Error::Domain(format!(
                "static field must be finite and non-negative, got {mu0_h} T"
            )));
        }
        Ok(FieldPoint(mu0_h))
    }

    pub fn tesla(self) -> f64 {
        self.0
    }
}

/// Magnetic parameters of the film.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnonParams {
    /// γ/2π in GHz/T.
    pub gamma_over_2pi: f64,
    /// μ0Ms in T.
    pub mu0_ms: f64,
    /// Intrinsic Gilbert damping.
    pub alpha_in: f64,
    /// Coupling-induced damping added on top of `alpha_in`.
    pub alpha_cp: f64,
}

impl Default for MagnonParams {
    /// Measured YIG film: μ0Ms = 0.172 T, γ/2π = 28 GHz/T, α_in = 3.2e-4.
    fn default() -> Self {
        MagnonParams {
            gamma_over_2pi: 28.0,
            mu0_ms: 0.172,
            alpha_in: 3.2e-4,
            alpha_cp: 0.0,
        }
    }
}

impl MagnonParams {
    pub fn new(gamma_over_2pi: f64, mu0_ms: f64, alpha_in: f64, alpha_cp: f64) -> Result<Self> {
        let p = MagnonParams {
            gamma_over_2pi,
            mu0_ms,
            alpha_in,
            alpha_cp,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from γ in rad/(T·s) instead of γ/2π.
    pub fn from_gamma(gamma: f64, mu0_ms: f64, alpha_in: f64, alpha_cp: f64) -> Result<Self> {
        Self::new(gamma / GHZ_TO_RAD_PER_S, mu0_ms, alpha_in, alpha_cp)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                "gamma_over_2pi",
                self.gamma_over_2pi,
                self.gamma_over_2pi > 0.0,
            ),
            ("mu0_ms", self.mu0_ms, self.mu0_ms > 0.0),
            ("alpha_in", self.alpha_in, self.alpha_in >= 0.0),
            ("alpha_cp", self.alpha_cp, self.alpha_cp >= 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::Config(format!(
                    "magnon.{name} out of range: {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn alpha_eff(&self) -> f64 {
        self.alpha_in + self.alpha_cp
    }

    /// Same film with a different coupling-induced damping.
    pub fn with_alpha_cp(mut self, alpha_cp: f64) -> Self {
        self.alpha_cp = alpha_cp;
        self
    }

    /// ω_m = γ·μ0Ms in rad/s.
    pub fn omega_m(&self) -> f64 {
        ghz_to_angular(self.gamma_over_2pi * self.mu0_ms)
    }
}

/// Kittel resonance f = (γ/2π)·sqrt(μ0H(μ0H + μ0Ms)) in GHz.
pub fn kittel_frequency(h: FieldPoint, p: &MagnonParams) -> f64 {
    let b = h.tesla();
    p.gamma_over_2pi * (b * (b + p.mu0_ms)).sqrt()
}

/// Field at which the Kittel mode sits at `f_ghz`.
pub fn kittel_field(f_ghz: f64, p: &MagnonParams) -> Result<FieldPoint> {
    if !(f_ghz >= 0.0) || !f_ghz.is_finite() {
        return Err(Error::Domain(format!(
            "frequency must be non-negative, got {f_ghz} GHz"
        )));
    }
    let ms = p.mu0_ms;
    let x = f_ghz / p.gamma_over_2pi;
    // Positive root of B² + Ms·B − x² = 0, written to avoid cancellation.
    let disc = (ms * ms + 4.0 * x * x).sqrt();
    let b = if x == 0.0 {
        0.0
    } else {
        2.0 * x * x / (ms + disc)
    };
    FieldPoint::new(b)
}

/// ω̃_r = ω_r − i·α_eff·ω_r in rad/s.
pub fn magnon_complex_frequency(h: FieldPoint, p: &MagnonParams) -> Complex64 {
    let wr = ghz_to_angular(kittel_frequency(h, p));
    Complex64::new(wr, -p.alpha_eff() * wr)
}
