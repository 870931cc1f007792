//! Regime analysis of individual coupling centres.
//!
//! A coupling centre is the point (H_c, f_n) where the magnon dispersion
//! crosses photon mode n. The report combines the pairwise eigenvalues
//! around H_c with the per-mode transmission at the centre:
//!
//! * real parts split more than linewidths at H_c → normal anti-crossing;
//! * otherwise the centre response decides: enhanced |S21| relative to the
//!   bare photon is coupling-induced absorption, suppressed is the opposite
//!   anti-crossing.

use serde::Serialize;

use crate::coupling::{pairwise_branches, sweep_pairwise, track_branches, HybridSystem};
use crate::magnon::{kittel_field, magnon_complex_frequency, FieldPoint};
use crate::phasemap::Regime;
use crate::photon::photon_complex_frequency;
use crate::transmission::{linspace, s21_per_mode};
use crate::units::GHZ_TO_RAD_PER_S;
use crate::{Error, Result};

/// Default half width of the field window around a centre (T).
pub const WINDOW_HALF_WIDTH: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RealCharacter {
    Repel,
    Cross,
    Attract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImagCharacter {
    Cross,
    Repel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterReport {
    pub mode: usize,
    pub f_n_ghz: f64,
    pub crossing_field_t: f64,
    /// |Re(E+ − E−)|/2π at H_c, GHz.
    pub real_split_ghz: f64,
    /// |Im(E+ − E−)|/2π at H_c, GHz.
    pub imag_split_ghz: f64,
    /// |Re(E+ − E−)| / |Re(ω̃_r − ω̃_n)| a few μT from H_c: 1 for free
    /// crossing, > 1 for repulsion, < 1 when the branches are pulled together.
    /// Repel above 1 + 1e-3, attract below 1/√2, cross in between.
    pub crossing_slope: f64,
    /// |S21(ω_n, H_c)| of the coupled centre over the bare photon's.
    pub absorption_ratio: f64,
    pub real: RealCharacter,
    pub imag: ImagCharacter,
    pub regime: Regime,
}

/// Evenly spaced fields `H_c ± half_width` (clipped at zero).
pub fn center_window(
    sys: &HybridSystem,
    n: usize,
    half_width: f64,
    points: usize,
) -> Result<Vec<FieldPoint>> {
    let hc = crossing_field(sys, n)?.tesla();
    linspace((hc - half_width).max(0.0), hc + half_width, points)
        .into_iter()
        .map(FieldPoint::new)
        .collect()
}

pub fn crossing_field(sys: &HybridSystem, n: usize) -> Result<FieldPoint> {
    let mode = sys
        .modes()
        .get(n)
        .ok_or_else(|| Error::Config(format!("no photon mode with index {n}")))?;
    kittel_field(mode.f_ghz, &sys.center_magnon(n))
}

pub fn analyze_center(sys: &HybridSystem, n: usize) -> Result<CenterReport> {
    let hc = crossing_field(sys, n)?;
    let magnon = sys.center_magnon(n);
    let mode = &sys.modes()[n];
    let wn = photon_complex_frequency(mode);
    let k_sq = sys.couplings()[n].k_squared();
    let branches = |h: FieldPoint| {
        let wr = magnon_complex_frequency(h, &magnon);
        (
            wr,
            pairwise_branches(wr, wn, magnon.omega_m(), mode.omega(), k_sq),
        )
    };

    let (_, (p, m)) = branches(hc);
    let real_split_ghz = (p - m).re.abs() / GHZ_TO_RAD_PER_S;
    let imag_split_ghz = (p - m).im.abs() / GHZ_TO_RAD_PER_S;

    let dh = 2e-6;
    let slope = [-dh, dh]
        .iter()
        .map(|&off| {
            let (wr, (p, m)) = branches(FieldPoint::new(hc.tesla() + off)?);
            Ok((p - m).re.abs() / (wr - wn).re.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let crossing_slope = 0.5 * (slope[0] + slope[1]);
    let real = if crossing_slope > 1.0 + 1e-3 {
        RealCharacter::Repel
    } else if crossing_slope >= std::f64::consts::FRAC_1_SQRT_2 {
        RealCharacter::Cross
    } else {
        RealCharacter::Attract
    };

    let fields = center_window(sys, n, WINDOW_HALF_WIDTH, 801)?;
    let tracked = track_branches(sweep_pairwise(sys, n, &fields));
    let diffs: Vec<f64> = tracked
        .eigenvalues
        .iter()
        .map(|e| e[0].im - e[1].im)
        .collect();
    let scale = diffs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let significant: Vec<f64> = diffs
        .into_iter()
        .filter(|d| d.abs() > 1e-6 * scale)
        .collect();
    let sign_change = significant
        .windows(2)
        .any(|w| w[0].signum() != w[1].signum());
    let imag = if sign_change {
        ImagCharacter::Cross
    } else {
        ImagCharacter::Repel
    };

    let w = mode.omega();
    let coupled = s21_per_mode(w, hc, sys, n).map_err(|e| Error::Numerical(e.to_string()))?;
    let bare = s21_per_mode(w, hc, &sys.clone().decoupled(), n)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let absorption_ratio = coupled.norm() / bare.norm();

    let regime = if real_split_ghz > imag_split_ghz {
        Regime::CitNormal
    } else if absorption_ratio > 1.0 {
        Regime::Cia
    } else {
        Regime::CitOpposite
    };
    Ok(CenterReport {
        mode: mode.label,
        f_n_ghz: mode.f_ghz,
        crossing_field_t: hc.tesla(),
        real_split_ghz,
        imag_split_ghz,
        crossing_slope,
        absorption_ratio,
        real,
        imag,
        regime,
    })
}

pub fn analyze_all(sys: &HybridSystem) -> Result<Vec<CenterReport>> {
    (0..sys.len()).map(|n| analyze_center(sys, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_centres_reproduce_observed_regimes() {
        let reports = analyze_all(&HybridSystem::measured_device()).unwrap();
        let got: Vec<_> = reports.iter().map(|r| (r.regime, r.real, r.imag)).collect();
        assert_eq!(
            got,
            vec![
                (
                    Regime::CitOpposite,
                    RealCharacter::Attract,
                    ImagCharacter::Repel
                ),
                (Regime::Cia, RealCharacter::Cross, ImagCharacter::Repel),
                (
                    Regime::CitNormal,
                    RealCharacter::Repel,
                    ImagCharacter::Cross
                ),
            ]
        );
        assert!(reports[1].absorption_ratio > 1.0);
        assert!(reports[0].absorption_ratio < 1.0 && reports[2].absorption_ratio < 1.0);
    }

    #[test]
    fn slope_matches_closed_form() {
        // imag-dominated centre: slope → D/sqrt(D² + g²) with D the damping
        // mismatch and g² = 2ω_mω_n|K|²
        let sys = HybridSystem::measured_device();
        let r = analyze_center(&sys, 0).unwrap();
        let m = sys.center_magnon(0);
        let mode = &sys.modes()[0];
        let d = mode.omega() * (m.alpha_eff() - mode.beta_in);
        let g2 = 2.0 * m.omega_m() * mode.omega() * 0.008f64.powi(2);
        let expect = d.abs() / (d * d + g2).sqrt();
        assert!(
            (r.crossing_slope - expect).abs() < 1e-3,
            "{} vs {expect}",
            r.crossing_slope
        );
    }

    #[test]
    fn decoupled_centre_crosses_freely() {
        let sys = HybridSystem::measured_device().decoupled();
        let r = analyze_center(&sys, 2).unwrap();
        assert!((r.crossing_slope - 1.0).abs() < 1e-9);
        assert!((r.absorption_ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.real, RealCharacter::Cross);
    }

    #[test]
    fn bad_index() {
        assert!(analyze_center(&HybridSystem::measured_device(), 7).is_err());
    }
}
