//! Frequency gap at a coupling centre and the CIT/CIA phase diagram.
//!
//! With a dissipative direct coupling k_MP = ik and an indirect path of
//! relative amplitude σ and phase ψ, the gap argument is
//! `A = −2k²(1 − σ cos ψ) − (β − α_eff)²` and the gap is `f_p·sqrt(|A|)`.
//! A > 0 splits the real parts (normal anti-crossing), A < 0 splits the
//! linewidths (opposite anti-crossing) and A = 0 is the CIA boundary
//! `ψ* = arccos[(1 + d²/2k²)/σ]`, d = |β − α_eff|.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::transmission::linspace;
use crate::{Error, Result};

/// Tolerance on |A| below which a cell counts as the CIA boundary.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInputs {
    /// Magnitude of the dissipative direct coupling k_MP = ik.
    pub k: f64,
    pub sigma: f64,
    /// Degrees.
    pub psi: f64,
    pub beta: f64,
    pub alpha_eff: f64,
    /// Photon frequency in GHz.
    pub f_p: f64,
}

impl GapInputs {
    pub fn new(k: f64, sigma: f64, psi: f64, beta: f64, alpha_eff: f64, f_p: f64) -> Result<Self> {
        let g = GapInputs {
            k,
            sigma,
            psi,
            beta,
            alpha_eff,
            f_p,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("k", self.k),
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("alpha_eff", self.alpha_eff),
        ];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and ≥ 0, got {v}"
                )));
            }
        }
        if !self.psi.is_finite() || !(self.f_p > 0.0 && self.f_p.is_finite()) {
            return Err(Error::Domain("psi must be finite and f_p positive".into()));
        }
        Ok(())
    }

    /// A = −2k²(1 − σ cos ψ) − (β − α_eff)².
    pub fn gap_argument(&self) -> f64 {
        let d = self.beta - self.alpha_eff;
        -2.0 * self.k * self.k * (1.0 - self.sigma * self.psi.to_radians().cos()) - d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GapKind {
    RealGap,
    ImagGap,
    Zero,
}

impl GapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GapKind::RealGap => "REAL_GAP",
            GapKind::ImagGap => "IMAG_GAP",
            GapKind::Zero => "ZERO",
        }
    }
}

/// Gap magnitude in GHz with the sign of A carried by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub gap_ghz: f64,
    pub kind: GapKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    CitNormal,
    CitOpposite,
    Cia,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::CitNormal => "CIT_NORMAL",
            Regime::CitOpposite => "CIT_OPPOSITE",
            Regime::Cia => "CIA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub delta: GapRecord,
    pub regime: Regime,
}

/// Gap with the default tolerance.
pub fn frequency_gap(input: &GapInputs) -> GapRecord {
    frequency_gap_with_tol(input, DEFAULT_TOL)
}

/// `tol` is applied to |A| (dimensionless).
pub fn frequency_gap_with_tol(input: &GapInputs, tol: f64) -> GapRecord {
    let a = input.gap_argument();
    let kind = if a.abs() <= tol {
        GapKind::Zero
    } else if a > 0.0 {
        GapKind::RealGap
    } else {
        GapKind::ImagGap
    };
    GapRecord {
        gap_ghz: input.f_p * a.abs().sqrt(),
        kind,
    }
}

pub fn classify(input: &GapInputs, tol: f64) -> RegimeCell {
    let delta = frequency_gap_with_tol(input, tol);
    let regime = match delta.kind {
        GapKind::RealGap => Regime::CitNormal,
        GapKind::ImagGap => Regime::CitOpposite,
        GapKind::Zero => Regime::Cia,
    };
    RegimeCell { delta, regime }
}

/// ψ* in degrees where A = 0, or `None` when the arccos argument exceeds 1.
pub fn cia_boundary(sigma: f64, k: f64, d: f64) -> Option<f64> {
    if !(sigma > 0.0 && k > 0.0) {
        return None;
    }
    let arg = (1.0 + d * d / (2.0 * k * k)) / sigma;
    (arg <= 1.0).then(|| arg.acos().to_degrees())
}

/// Largest damping mismatch with a boundary, d_max = k·sqrt(2(σ − 1)).
pub fn cia_existence_limit(sigma: f64, k: f64) -> Option<f64> {
    (sigma >= 1.0 && k > 0.0).then(|| k * (2.0 * (sigma - 1.0)).sqrt())
}

/// Grid over ψ (degrees) × d = |β − α_eff|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramSpec {
    pub sigma: f64,
    pub k: f64,
    #[serde(default = "default_psi_range")]
    pub psi_range: [f64; 2],
    #[serde(default = "default_points")]
    pub psi_points: usize,
    #[serde(default = "default_d_range")]
    pub d_range: [f64; 2],
    #[serde(default = "default_points")]
    pub d_points: usize,
    /// Photon frequency used for gap magnitudes (GHz).
    #[serde(default = "default_f_p")]
    pub f_p: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_psi_range() -> [f64; 2] {
    [0.0, 90.0]
}
fn default_d_range() -> [f64; 2] {
    [0.0, 0.06]
}
fn default_points() -> usize {
    501
}
fn default_f_p() -> f64 {
    5.56
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl PhaseDiagramSpec {
    /// Defaults of the reference diagram (k = 0.02, σ = 2).
    pub fn new(sigma: f64, k: f64) -> Self {
        PhaseDiagramSpec {
            sigma,
            k,
            psi_range: default_psi_range(),
            psi_points: default_points(),
            d_range: default_d_range(),
            d_points: default_points(),
            f_p: default_f_p(),
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub sigma: f64,
    pub k: f64,
    pub psi_axis: Vec<f64>,
    pub damping_axis: Vec<f64>,
    /// `cells[i][j]` at damping_axis[i], psi_axis[j].
    pub cells: Vec<Vec<RegimeCell>>,
    /// (d, ψ*) along the damping axis, closed by the existence limit when it
    /// falls inside the axis range.
    pub boundary: Vec<(f64, f64)>,
}

impl PhaseDiagram {
    pub fn regime_at(&self, i: usize, j: usize) -> Regime {
        self.cells[i][j].regime
    }
}

/// Classifies every cell of the grid; rows run on `workers` threads
/// (0 = all available) and the result does not depend on the count.
pub fn phase_diagram(spec: &PhaseDiagramSpec, workers: usize) -> Result<PhaseDiagram> {
    if !(spec.sigma >= 0.0 && spec.k >= 0.0 && spec.tol > 0.0) {
        return Err(Error::Config(
            "phase diagram needs sigma ≥ 0, k ≥ 0, tol > 0".into(),
        ));
    }
    let psi_axis = linspace(spec.psi_range[0], spec.psi_range[1], spec.psi_points);
    let damping_axis = linspace(spec.d_range[0], spec.d_range[1], spec.d_points);
    let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1]);
    if !increasing(&psi_axis) || !increasing(&damping_axis) || damping_axis[0] < 0.0 {
        return Err(Error::Config(
            "phase diagram axes need ≥ 2 strictly increasing points and d ≥ 0".into(),
        ));
    }
    let row = |&d: &f64| -> Vec<RegimeCell> {
        psi_axis
            .iter()
            .map(|&psi| {
                let g = GapInputs {
                    k: spec.k,
                    sigma: spec.sigma,
                    psi,
                    beta: d,
                    alpha_eff: 0.0,
                    f_p: spec.f_p,
                };
                classify(&g, spec.tol)
            })
            .collect()
    };
    let build = || damping_axis.par_iter().map(row).collect::<Vec<_>>();
    let cells = if workers == 0 {
        build()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(build)
    };

    let mut boundary: Vec<(f64, f64)> = damping_axis
        .iter()
        .filter_map(|&d| cia_boundary(spec.sigma, spec.k, d).map(|p| (d, p)))
        .collect();
    if let Some(d_max) = cia_existence_limit(spec.sigma, spec.k) {
        let inside = d_max > damping_axis[0] && d_max < damping_axis[damping_axis.len() - 1];
        if inside && boundary.last().is_some_and(|&(d, _)| d < d_max) {
            boundary.push((d_max, 0.0));
        }
    }
    Ok(PhaseDiagram {
        sigma: spec.sigma,
        k: spec.k,
        psi_axis,
        damping_axis,
        cells,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{kpp_from_phase, pairwise_branches};
    use crate::photon::PhotonPhaseProfile;
    use crate::Complex64;
    use proptest::prelude::*;

    fn inputs(k: f64, sigma: f64, psi: f64, d: f64) -> GapInputs {
        GapInputs::new(k, sigma, psi, d, 0.0, 5.56).unwrap()
    }

    #[test]
    fn gap_examples() {
        let g = frequency_gap(&inputs(0.02, 2.0, 0.0, 0.0));
        assert_eq!(g.kind, GapKind::RealGap);
        assert!((g.gap_ghz - 5.56 * 0.02 * 2f64.sqrt()).abs() < 1e-12);
        assert!((g.gap_ghz - 0.1573).abs() < 5e-5);

        for psi in [0.0, 45.0, 170.0, -320.0] {
            assert_eq!(
                frequency_gap(&inputs(0.02, 0.0, psi, 0.003)).kind,
                GapKind::ImagGap
            );
        }
        let r = frequency_gap(&inputs(0.02, 2.0, 60.0, 0.0));
        assert_eq!(r.kind, GapKind::Zero);
    }

    #[test]
    fn boundary_examples() {
        assert!((cia_boundary(2.0, 0.02, 0.0).unwrap() - 60.0).abs() < 1e-10);
        assert!(
            (cia_boundary(2.0, 0.02, 0.02).unwrap() - 0.75f64.acos().to_degrees()).abs() < 1e-10
        );
        assert!((cia_boundary(2.0, 0.02, 0.02).unwrap() - 41.41).abs() < 5e-3);
        let d_max = cia_existence_limit(2.0, 0.02).unwrap();
        assert!((d_max - 0.0283).abs() < 1e-4);
        assert!(cia_boundary(2.0, 0.02, d_max * (1.0 - 1e-12)).unwrap() < 0.01);
        assert!(cia_boundary(2.0, 0.02, d_max * 1.001).is_none());
        assert_eq!(cia_boundary(1.0, 0.02, 0.0), Some(0.0));
        assert!(cia_boundary(1.0, 0.02, 1e-3).is_none());
        assert!(
            (cia_boundary(4.0, 0.02, 0.0).unwrap() - 0.25f64.acos().to_degrees()).abs() < 1e-10
        );
        assert!((cia_boundary(4.0, 0.02, 0.0).unwrap() - 75.52).abs() < 5e-3);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&inputs(0.01, 3.0, 10.0, 0.001), DEFAULT_TOL).regime,
            Regime::CitNormal
        );
        assert_eq!(
            classify(&inputs(0.01, 0.0, 10.0, 0.001), DEFAULT_TOL).regime,
            Regime::CitOpposite
        );
        for d in [0.0, 0.005, 0.02, 0.028] {
            let psi = cia_boundary(2.0, 0.02, d).unwrap();
            assert_eq!(
                classify(&inputs(0.02, 2.0, psi, d), DEFAULT_TOL).regime,
                Regime::Cia
            );
        }
    }

    #[test]
    fn reference_diagram() {
        let mut spec = PhaseDiagramSpec::new(2.0, 0.02);
        spec.psi_points = 91;
        spec.d_points = 61;
        let pd = phase_diagram(&spec, 1).unwrap();
        let &(d_end, psi_end) = pd.boundary.last().unwrap();
        assert!((d_end - 0.02 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(psi_end, 0.0);
        assert!((pd.boundary[0].1 - 60.0).abs() < 1e-10);
        for &(d, psi) in &pd.boundary {
            let g = GapInputs::new(0.02, 2.0, psi, d, 0.0, 5.56).unwrap();
            assert!(g.gap_argument().abs() < spec.tol);
        }
        // small d: below ψ* normal, above ψ* opposite
        let i = 5;
        let psi_star = cia_boundary(2.0, 0.02, pd.damping_axis[i]).unwrap();
        for (j, &psi) in pd.psi_axis.iter().enumerate() {
            let r = pd.regime_at(i, j);
            if psi < psi_star - 0.5 {
                assert_eq!(r, Regime::CitNormal);
            } else if psi > psi_star + 0.5 {
                assert_eq!(r, Regime::CitOpposite);
            }
        }
        // beyond the existence limit everything is opposite
        let last = pd.damping_axis.len() - 1;
        assert!(pd.cells[last]
            .iter()
            .all(|c| c.regime == Regime::CitOpposite));
        assert_eq!(pd, phase_diagram(&spec, 3).unwrap());
    }

    #[test]
    fn diagram_rejects_bad_axes() {
        let mut spec = PhaseDiagramSpec::new(2.0, 0.02);
        spec.psi_points = 1;
        assert!(phase_diagram(&spec, 1).is_err());
        let mut spec = PhaseDiagramSpec::new(2.0, 0.02);
        spec.d_range = [0.05, 0.01];
        assert!(phase_diagram(&spec, 1).is_err());
    }

    #[test]
    fn sign_of_gap_matches_eigen_character() {
        // ω_m = ω_p at the crossing, K² = −k² + σk² cos ψ
        let f_p = 4.816;
        let wp = crate::units::ghz_to_angular(f_p);
        let mut checked = 0;
        for (i, psi) in linspace(0.0, 180.0, 10).into_iter().enumerate() {
            for (j, d) in linspace(0.0, 0.04, 10).into_iter().enumerate() {
                let k = 0.01 + 0.002 * ((i + j) % 5) as f64;
                let sigma = 0.5 + 0.4 * (j % 6) as f64;
                let beta = 2e-3 + d;
                let alpha = 2e-3;
                let g = GapInputs::new(k, sigma, psi, beta, alpha, f_p).unwrap();
                let a = g.gap_argument();
                if a.abs() < 1e-7 {
                    continue;
                }
                let profile = PhotonPhaseProfile::new(sigma, psi).unwrap();
                let k_pp_sq = kpp_from_phase(k, &profile).unwrap().k_pp_sq;
                let k_sq = Complex64::new(-k * k + k_pp_sq, 0.0);
                let (p, m) = pairwise_branches(
                    Complex64::new(wp, -wp * alpha),
                    Complex64::new(wp, -wp * beta),
                    wp,
                    wp,
                    k_sq,
                );
                let split = p - m;
                let real_dominant = split.re.abs() > split.im.abs();
                assert_eq!(real_dominant, a > 0.0, "psi={psi} d={d} A={a}");
                let rel = ((split.norm() / wp) - a.abs().sqrt()).abs() / a.abs().sqrt();
                assert!(rel < 1e-9);
                checked += 1;
            }
        }
        assert!(checked >= 95);
    }

    proptest! {
        #[test]
        fn trichotomy_follows_sign(k in 0.0..0.05f64, sigma in 0.0..5.0f64,
                                   psi in -360.0..360.0f64, beta in 0.0..0.05f64,
                                   alpha in 0.0..0.05f64) {
            let g = GapInputs::new(k, sigma, psi, beta, alpha, 5.0).unwrap();
            let cell = classify(&g, DEFAULT_TOL);
            let a = g.gap_argument();
            let expect = if a.abs() <= DEFAULT_TOL { Regime::Cia }
                else if a > 0.0 { Regime::CitNormal } else { Regime::CitOpposite };
            prop_assert_eq!(cell.regime, expect);
            let kind_ok = matches!((cell.delta.kind, cell.regime),
                (GapKind::Zero, Regime::Cia) | (GapKind::RealGap, Regime::CitNormal)
                | (GapKind::ImagGap, Regime::CitOpposite));
            prop_assert!(kind_ok);
            prop_assert!(cell.delta.gap_ghz >= 0.0);
        }

        #[test]
        fn boundary_points_classify_as_cia(sigma in 1.01..6.0f64, k in 0.002..0.05f64, t in 0.0..1.0f64) {
            let d = t * cia_existence_limit(sigma, k).unwrap();
            let psi = cia_boundary(sigma, k, d).unwrap();
            let g = GapInputs::new(k, sigma, psi, d, 0.0, 5.0).unwrap();
            prop_assert_eq!(classify(&g, DEFAULT_TOL).regime, Regime::Cia);
        }

        #[test]
        fn boundary_shifts_up_with_sigma_and_k(sigma in 1.05..5.0f64, k in 0.005..0.04f64, t in 0.05..0.9f64) {
            let d = t * cia_existence_limit(sigma, k).unwrap();
            let psi = cia_boundary(sigma, k, d).unwrap();
            let ds = cia_boundary(sigma * 1.01, k, d).unwrap();
            let dk = cia_boundary(sigma, k * 1.01, d).unwrap();
            prop_assert!(ds > psi);
            prop_assert!(dk > psi);
        }
    }
}
