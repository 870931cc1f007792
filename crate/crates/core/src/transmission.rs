//! Microwave transmission |S21| over the (field, frequency) plane.
//!
//! Three models are available:
//!
//! * [`s21_single`]: one photon mode coupled to the magnon with constant K,
//!   `S21 = Γω²(ω − ω̃_r) / [(ω − ω̃_r)(ω − ω̃_p) − ½ω_mω_pK²]`;
//! * [`s21_per_mode`]: the same form for centre `n` of a [`HybridSystem`]
//!   with K² = k_MP² + k_PP² and the centre's coupling-induced damping;
//! * [`s21_multimode`]: `C·ω²(ω − ω̃_r) / det M(ω)` with the full coupling
//!   matrix.
//!
//! The formulas carry an ω² prefactor and are not dimensionless; maps store
//! magnitudes normalised by their maximum and keep the scale factor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{coupling_determinant, CouplingConstant, HybridSystem};
use crate::magnon::{magnon_complex_frequency, FieldPoint, MagnonParams};
use crate::photon::{photon_complex_frequency, PhotonMode};
use crate::units::{angular_to_ghz, ghz_to_angular, to_db};
use crate::{Error, Result};

/// The denominator vanished exactly (lossless pole).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub omega: f64,
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exact pole at {} GHz", angular_to_ghz(self.omega))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Single,
    PerMode,
    Multimode,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Single, Variant::PerMode, Variant::Multimode];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Single => "single",
            Variant::PerMode => "per-mode",
            Variant::Multimode => "multimode",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!("unknown variant {s:?} (single|per-mode|multimode)"))
            })
    }
}

fn single_form(
    omega: f64,
    wr: Complex64,
    mode: &PhotonMode,
    omega_m: f64,
    k_sq: Complex64,
    gamma: f64,
) -> Result<Complex64, Pole> {
    let w = Complex64::new(omega, 0.0);
    let mag = w - wr;
    let den = mag * (w - photon_complex_frequency(mode)) - k_sq * (0.5 * omega_m * mode.omega());
    if den.norm() == 0.0 {
        return Err(Pole { omega });
    }
    Ok(mag * (gamma * omega * omega) / den)
}

/// Single photon mode coupled through K (angular frequency in rad/s).
pub fn s21_single(
    omega: f64,
    h: FieldPoint,
    magnon: &MagnonParams,
    mode: &PhotonMode,
    k: CouplingConstant,
    gamma: f64,
) -> Result<Complex64, Pole> {
    single_form(
        omega,
        magnon_complex_frequency(h, magnon),
        mode,
        magnon.omega_m(),
        k.squared(),
        gamma,
    )
}

/// Centre `n` of a hybrid system, with K² = k_MP² + k_PP² and
/// α_eff = α_in + α_cp,n.
pub fn s21_per_mode(
    omega: f64,
    h: FieldPoint,
    sys: &HybridSystem,
    n: usize,
) -> Result<Complex64, Pole> {
    let magnon = sys.center_magnon(n);
    let c = &sys.couplings()[n];
    single_form(
        omega,
        magnon_complex_frequency(h, &magnon),
        &sys.modes()[n],
        magnon.omega_m(),
        c.k_squared(),
        c.gamma,
    )
}

/// Direct-coupling-only response of centre `n` (k_PP and α_cp dropped).
fn s21_direct(omega: f64, h: FieldPoint, sys: &HybridSystem, n: usize) -> Result<Complex64, Pole> {
    let magnon = sys.magnon().with_alpha_cp(0.0);
    let c = &sys.couplings()[n];
    let k_mp = c.decomposition.k_mp;
    single_form(
        omega,
        magnon_complex_frequency(h, &magnon),
        &sys.modes()[n],
        magnon.omega_m(),
        k_mp * k_mp,
        c.gamma,
    )
}

/// Normalisation of the multimode response: geometric mean over modes of
/// Γ_n·Π_{j≠n}|ω_n − ω̃_j|, which equalises the K → 0 peak heights with the
/// per-mode responses (exactly for a single mode).
pub fn multimode_normalization(sys: &HybridSystem) -> f64 {
    let wn: Vec<Complex64> = sys.modes().iter().map(photon_complex_frequency).collect();
    let log_sum: f64 = sys
        .modes()
        .iter()
        .zip(sys.couplings())
        .enumerate()
        .map(|(n, (m, c))| {
            let w = Complex64::new(m.omega(), 0.0);
            let prod: f64 = wn
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != n)
                .map(|(_, &z)| (w - z).norm())
                .product();
            (c.gamma * prod).ln()
        })
        .sum();
    (log_sum / sys.len() as f64).exp()
}

/// Full multimode response C·ω²(ω − ω̃_r)/det M(ω).
pub fn s21_multimode(omega: f64, h: FieldPoint, sys: &HybridSystem) -> Result<Complex64, Pole> {
    multimode_with(omega, h, sys, multimode_normalization(sys))
}

fn multimode_with(
    omega: f64,
    h: FieldPoint,
    sys: &HybridSystem,
    norm: f64,
) -> Result<Complex64, Pole> {
    let w = Complex64::new(omega, 0.0);
    let det = coupling_determinant(sys, w, h);
    if det.norm() == 0.0 {
        return Err(Pole { omega });
    }
    let mag = w - magnon_complex_frequency(h, sys.magnon());
    Ok(mag * (norm * omega * omega) / det)
}

/// Complex response of a whole system for one variant. Per-mode variants
/// sum the complex responses of all centres.
pub fn s21_variant(
    omega: f64,
    h: FieldPoint,
    sys: &HybridSystem,
    variant: Variant,
) -> Result<Complex64, Pole> {
    match variant {
        Variant::Single => (0..sys.len()).map(|n| s21_direct(omega, h, sys, n)).sum(),
        Variant::PerMode => (0..sys.len()).map(|n| s21_per_mode(omega, h, sys, n)).sum(),
        Variant::Multimode => s21_multimode(omega, h, sys),
    }
}

/// Field axis (T) × frequency axis (GHz), both strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    field_axis: Vec<FieldPoint>,
    freq_axis: Vec<f64>,
}

impl SweepGrid {
    pub fn new(field_axis: Vec<FieldPoint>, freq_axis: Vec<f64>) -> Result<Self> {
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1]);
        let fields: Vec<f64> = field_axis.iter().map(|h| h.tesla()).collect();
        if !increasing(&fields) {
            return Err(Error::Config(
                "field axis needs ≥ 2 strictly increasing points".into(),
            ));
        }
        if !increasing(&freq_axis) || freq_axis[0] <= 0.0 {
            return Err(Error::Config(
                "frequency axis needs ≥ 2 strictly increasing positive points".into(),
            ));
        }
        Ok(SweepGrid {
            field_axis,
            freq_axis,
        })
    }

    /// Evenly spaced axes including both end points.
    pub fn linspace(
        field_range: (f64, f64),
        field_points: usize,
        freq_range_ghz: (f64, f64),
        freq_points: usize,
    ) -> Result<Self> {
        let fields = linspace(field_range.0, field_range.1, field_points)
            .into_iter()
            .map(FieldPoint::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            fields,
            linspace(freq_range_ghz.0, freq_range_ghz.1, freq_points),
        )
    }

    pub fn field_axis(&self) -> &[FieldPoint] {
        &self.field_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.field_axis.len(), self.freq_axis.len())
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub variant: Option<Variant>,
    /// Hash of the configuration snapshot the map was computed from.
    pub snapshot: Option<String>,
}

/// |S21| over a sweep grid, indexed `[field][freq]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMap {
    pub grid: SweepGrid,
    /// Linear magnitudes normalised to a maximum of 1.
    pub values: Vec<Vec<f64>>,
    /// Raw magnitude corresponding to a normalised value of 1.
    pub scale: f64,
    /// Grid cells that hit an exact pole and were clamped.
    pub saturated: Vec<(usize, usize)>,
    pub metadata: MapMetadata,
}

impl SpectrumMap {
    /// Builds a map from linear magnitudes; `values` must match the grid.
    pub fn from_values(grid: SweepGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        let (nf, nw) = grid.shape();
        if values.len() != nf || values.iter().any(|r| r.len() != nw) {
            return Err(Error::Data("map values do not match the grid shape".into()));
        }
        if values
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Data(
                "map values must be finite and non-negative".into(),
            ));
        }
        Ok(SpectrumMap {
            grid,
            values,
            scale: 1.0,
            saturated: Vec::new(),
            metadata: MapMetadata::default(),
        })
    }

    pub fn raw(&self, i: usize, j: usize) -> f64 {
        self.values[i][j] * self.scale
    }

    pub fn db(&self, i: usize, j: usize) -> f64 {
        to_db(self.values[i][j])
    }

    /// Frequency cut at field index `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i]
    }
}

/// Evaluates `variant` on every grid cell.
///
/// Rows are distributed over `workers` threads (0 = all available) and
/// assembled in grid order, so the result does not depend on the worker
/// count. Exact poles are clamped to the largest finite neighbouring value
/// and listed in [`SpectrumMap::saturated`].
pub fn sweep_spectrum(
    sys: &HybridSystem,
    grid: &SweepGrid,
    variant: Variant,
    workers: usize,
) -> Result<SpectrumMap> {
    let norm = multimode_normalization(sys);
    let eval = |h: FieldPoint, f: f64| -> Result<Complex64, Pole> {
        let w = ghz_to_angular(f);
        match variant {
            Variant::Multimode => multimode_with(w, h, sys, norm),
            _ => s21_variant(w, h, sys, variant),
        }
    };
    let rows = || -> Vec<Vec<Option<f64>>> {
        grid.field_axis
            .par_iter()
            .map(|&h| {
                grid.freq_axis
                    .iter()
                    .map(|&f| eval(h, f).ok().map(|z| z.norm()))
                    .collect()
            })
            .collect()
    };
    let raw = if workers == 0 {
        rows()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(rows)
    };

    for (i, row) in raw.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite |S21| at μ0H = {} T, f = {} GHz",
                        grid.field_axis[i].tesla(),
                        grid.freq_axis[j]
                    )));
                }
            }
        }
    }

    let (nf, nw) = grid.shape();
    let mut saturated = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![vec![0.0; nw]; nf];
    for i in 0..nf {
        for j in 0..nw {
            values[i][j] = match raw[i][j] {
                Some(v) => v,
                None => {
                    saturated.push((i, j));
                    neighbours(i, j, nf, nw)
                        .filter_map(|(a, b)| raw[a][b])
                        .fold(0.0, f64::max)
                }
            };
        }
    }
    let scale = values.iter().flatten().copied().fold(0.0, f64::max);
    if scale > 0.0 {
        for v in values.iter_mut().flatten() {
            *v /= scale;
        }
    }
    Ok(SpectrumMap {
        grid: grid.clone(),
        values,
        scale: if scale > 0.0 { scale } else { 1.0 },
        saturated,
        metadata: MapMetadata {
            variant: Some(variant),
            snapshot: None,
        },
    })
}

fn neighbours(i: usize, j: usize, nf: usize, nw: usize) -> impl Iterator<Item = (usize, usize)> {
    let rows = i.saturating_sub(1)..=(i + 1).min(nf - 1);
    rows.flat_map(move |a| {
        let cols = j.saturating_sub(1)..=(j + 1).min(nw - 1);
        cols.map(move |b| (a, b))
    })
    .filter(move |&p| p != (i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{CouplingDecomposition, ModeCoupling};
    use crate::magnon::kittel_field;
    use crate::photon::default_modes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(b: f64) -> FieldPoint {
        FieldPoint::new(b).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn uncoupled_single_mode_is_bare_photon() {
        let p = MagnonParams::default();
        let mode = PhotonMode::new(1, 5.56, 1.8e-3).unwrap();
        let k0 = CouplingConstant::real(0.0).unwrap();
        for (b, f) in [(0.05, 5.0), (0.13, 5.56), (0.2, 6.1)] {
            let w = ghz_to_angular(f);
            let s = s21_single(w, field(b), &p, &mode, k0, 3.6e-3).unwrap();
            let bare = c(3.6e-3 * w * w, 0.0) / (c(w, 0.0) - photon_complex_frequency(&mode));
            assert!(rel(s, bare) < 1e-12);
        }
    }

    #[test]
    fn bare_peak_sits_at_photon_frequency() {
        let p = MagnonParams::default();
        let mode = PhotonMode::new(1, 4.44, 2.3e-3).unwrap();
        let k0 = CouplingConstant::real(0.0).unwrap();
        let freqs = linspace(4.2, 4.7, 1001);
        let step = freqs[1] - freqs[0];
        let cut: Vec<f64> = freqs
            .iter()
            .map(|&f| {
                s21_single(ghz_to_angular(f), field(0.05), &p, &mode, k0, 1.0)
                    .unwrap()
                    .norm()
            })
            .collect();
        let imax = (0..cut.len())
            .max_by(|&a, &b| cut[a].total_cmp(&cut[b]))
            .unwrap();
        assert!((freqs[imax] - 4.44).abs() <= 0.5 * step + 1e-12);
    }

    #[test]
    fn lossless_pole_is_reported() {
        let p = MagnonParams::default().with_alpha_cp(0.0);
        let p = MagnonParams { alpha_in: 0.0, ..p };
        let mode = PhotonMode::new(1, 5.0, 0.0).unwrap();
        let k0 = CouplingConstant::real(0.0).unwrap();
        let r = s21_single(mode.omega(), field(0.05), &p, &mode, k0, 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn absorption_enhanced_for_weak_dissipative_centre() {
        // Centre of the K2 set (0.004i, α_cp = 0.01): the formula's response
        // at (ω_p, H_c) rises above the bare photon and is the cut maximum.
        let p = MagnonParams::default().with_alpha_cp(0.01);
        let mode = PhotonMode::new(2, 5.56, 1.8e-3).unwrap();
        let hc = kittel_field(5.56, &p).unwrap();
        let k = CouplingConstant::imaginary(0.004).unwrap();
        let k0 = CouplingConstant::real(0.0).unwrap();
        let at = |f: f64, k| {
            s21_single(ghz_to_angular(f), hc, &p, &mode, k, 3.6e-3)
                .unwrap()
                .norm()
        };
        let centre = at(5.56, k);
        assert!(centre > at(5.56, k0));
        for d in [-0.02, -0.005, 0.005, 0.02] {
            assert!(centre > at(5.56 + d, k));
        }
    }

    #[test]
    fn per_mode_reduces_to_bare_photon() {
        let modes = default_modes();
        let couplings = modes
            .iter()
            .map(|m| ModeCoupling::new(CouplingDecomposition::uncoupled(), 0.0, m))
            .collect();
        let sys = HybridSystem::new(MagnonParams::default(), modes, couplings).unwrap();
        for n in 0..3 {
            let m = &sys.modes()[n];
            let w = m.omega() * 1.001;
            let s = s21_per_mode(w, field(0.1), &sys, n).unwrap();
            let bare = c(2.0 * m.beta_in * w * w, 0.0) / (c(w, 0.0) - photon_complex_frequency(m));
            assert!(rel(s, bare) < 1e-12);
        }
    }

    #[test]
    fn multimode_uncoupled_poles_at_photons() {
        let sys = HybridSystem::measured_device().decoupled();
        let h = field(0.01);
        let norm = multimode_normalization(&sys);
        let w = ghz_to_angular(6.3);
        let s = s21_multimode(w, h, &sys).unwrap();
        let expect = c(norm * w * w, 0.0)
            / sys
                .modes()
                .iter()
                .map(|m| c(w, 0.0) - photon_complex_frequency(m))
                .product::<Complex64>();
        assert!(rel(s, expect) < 1e-12);
    }

    #[test]
    fn multimode_single_mode_normalisation_is_exact() {
        let full = HybridSystem::measured_device();
        let sys = full.single_center(2).decoupled();
        let m = &sys.modes()[0];
        let w = m.omega();
        let multi = s21_multimode(w, field(0.05), &sys).unwrap().norm();
        let per = s21_per_mode(w, field(0.05), &sys, 0).unwrap().norm();
        assert!((multi - per).abs() < 1e-12 * per);
    }

    #[test]
    fn bare_linewidth_tracks_damping() {
        // half width at half maximum of the power |S21|²
        for beta in [1e-3, 2.3e-3, 5e-3] {
            let mode = PhotonMode::new(1, 5.0, beta).unwrap();
            let p = MagnonParams::default();
            let k0 = CouplingConstant::real(0.0).unwrap();
            let freqs = linspace(4.8, 5.2, 40001);
            let pow: Vec<f64> = freqs
                .iter()
                .map(|&f| {
                    s21_single(ghz_to_angular(f), field(0.01), &p, &mode, k0, 1.0)
                        .unwrap()
                        .norm_sqr()
                })
                .collect();
            let peak = pow.iter().copied().fold(0.0, f64::max);
            let above: Vec<f64> = freqs
                .iter()
                .zip(&pow)
                .filter(|(_, &v)| v >= peak / 2.0)
                .map(|(&f, _)| f)
                .collect();
            let hwhm = (above.last().unwrap() - above[0]) / 2.0;
            let expect = beta * 5.0;
            assert!((hwhm - expect).abs() / expect < 0.1, "{hwhm} vs {expect}");
        }
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let sys = HybridSystem::measured_device();
        let grid = SweepGrid::linspace((0.05, 0.25), 23, (4.0, 7.5), 31).unwrap();
        for v in Variant::ALL {
            let a = sweep_spectrum(&sys, &grid, v, 1).unwrap();
            let b = sweep_spectrum(&sys, &grid, v, 3).unwrap();
            assert_eq!(a, b);
            assert!(a
                .values
                .iter()
                .flatten()
                .all(|x| x.is_finite() && *x >= 0.0));
            assert_eq!(a.values.iter().flatten().copied().fold(0.0, f64::max), 1.0);
        }
    }

    #[test]
    fn tiny_uncoupled_grid_matches_closed_form() {
        let sys = HybridSystem::measured_device().decoupled();
        let grid = SweepGrid::linspace((0.1, 0.2), 2, (5.5, 5.6), 2).unwrap();
        let map = sweep_spectrum(&sys, &grid, Variant::PerMode, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let w = ghz_to_angular(grid.freq_axis()[j]);
                let expect: Complex64 = sys
                    .modes()
                    .iter()
                    .map(|m| {
                        c(2.0 * m.beta_in * w * w, 0.0) / (c(w, 0.0) - photon_complex_frequency(m))
                    })
                    .sum();
                assert!((map.raw(i, j) - expect.norm()).abs() < 1e-12 * expect.norm());
            }
        }
    }

    #[test]
    fn poles_are_clamped_and_flagged() {
        let magnon = MagnonParams {
            alpha_in: 0.0,
            ..MagnonParams::default()
        };
        let mode = PhotonMode::new(1, 5.0, 0.0).unwrap();
        let coupling = ModeCoupling {
            decomposition: CouplingDecomposition::uncoupled(),
            alpha_cp: 0.0,
            gamma: 1.0,
        };
        let sys = HybridSystem::new(magnon, vec![mode], vec![coupling]).unwrap();
        let grid = SweepGrid::linspace((0.05, 0.06), 2, (4.9, 5.1), 3).unwrap();
        let map = sweep_spectrum(&sys, &grid, Variant::PerMode, 1).unwrap();
        assert_eq!(map.saturated, vec![(0, 1), (1, 1)]);
        assert!(map.values[0][1] > 0.0 && map.values[0][1].is_finite());
    }

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::linspace((0.1, 0.1), 2, (5.0, 6.0), 3).is_err());
        assert!(SweepGrid::linspace((0.1, 0.2), 1, (5.0, 6.0), 3).is_err());
        assert!(SweepGrid::linspace((0.1, 0.2), 3, (6.0, 5.0), 3).is_err());
        assert!("bogus".parse::<Variant>().is_err());
        assert_eq!("per-mode".parse::<Variant>().unwrap(), Variant::PerMode);
    }
}
