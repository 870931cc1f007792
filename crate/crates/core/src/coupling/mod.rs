//! Coupling-constant algebra and the hybrid magnon–photon eigenproblem.
//!
//! A coupling constant K is complex: its real part describes coherent
//! (level-repelling) coupling, its imaginary part dissipative
//! (level-attracting) coupling. The effective constant of a coupling centre
//! combines the direct photon–magnon term with the magnon-mediated
//! photon–photon term as K² = k_MP² + k_PP².

mod eigen;
pub mod poly;

pub use eigen::{
    build_coupling_matrix, coupling_determinant, multimode_eigenvalues, pairwise_branches,
    sweep_multimode, sweep_pairwise, track_branches, EigenBranches,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::magnon::MagnonParams;
use crate::photon::{default_modes, PhotonMode, PhotonPhaseProfile};
use crate::units::principal_sqrt;
use crate::{Error, Result};

/// Dimensionless complex coupling constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstant(Complex64);

impl CouplingConstant {
    /// Accepts |K| < 1 only; larger values are almost always unit mistakes.
    pub fn new(value: Complex64) -> Result<Self> {
        if !(value.norm() < 1.0) {
            return Err(Error::Config(format!(
                "|K| = {} outside the weak-coupling bound 1 (use new_unbounded to override)",
                value.norm()
            )));
        }
        Ok(CouplingConstant(value))
    }

    pub fn new_unbounded(value: Complex64) -> Self {
        CouplingConstant(value)
    }

    pub fn real(k: f64) -> Result<Self> {
        Self::new(Complex64::new(k, 0.0))
    }

    pub fn imaginary(k: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, k))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn squared(&self) -> Complex64 {
        self.0 * self.0
    }
}

/// Microscopic origin of a direct coupling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MicroCoupling {
    /// Faraday induction, Ampère and Lenz parameters: K² ≅ k_F(k_A − k_L).
    Induction { k_f: f64, k_a: f64, k_l: f64 },
    /// Coherent and dissipative rates: K² ≅ k_c² − k_d².
    Rates { k_c: f64, k_d: f64 },
}

impl MicroCoupling {
    pub fn k_squared(&self) -> f64 {
        match *self {
            MicroCoupling::Induction { k_f, k_a, k_l } => k_f * (k_a - k_l),
            MicroCoupling::Rates { k_c, k_d } => k_c * k_c - k_d * k_d,
        }
    }

    /// Direct constant implied by the micro-parameters (real or imaginary).
    pub fn k_direct(&self) -> Complex64 {
        principal_sqrt(Complex64::new(self.k_squared(), 0.0))
    }
}

/// Split of an effective coupling into direct and magnon-mediated parts.
///
/// `k_pp` is real for physical inputs. A negative k_PP² (destructive
/// indirect path) is carried as a purely imaginary `k_pp`, so that
/// `k_pp * k_pp` always reproduces the signed square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingDecomposition {
    pub k_mp: Complex64,
    pub k_pp: Complex64,
    pub micro: Option<MicroCoupling>,
}

impl CouplingDecomposition {
    pub fn new(k_mp: Complex64, k_pp: f64) -> Self {
        CouplingDecomposition {
            k_mp,
            k_pp: Complex64::new(k_pp, 0.0),
            micro: None,
        }
    }

    pub fn from_kpp_squared(k_mp: Complex64, k_pp_sq: f64) -> Self {
        CouplingDecomposition {
            k_mp,
            k_pp: principal_sqrt(Complex64::new(k_pp_sq, 0.0)),
            micro: None,
        }
    }

    pub fn uncoupled() -> Self {
        Self::new(Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn with_micro(mut self, micro: MicroCoupling) -> Self {
        self.micro = Some(micro);
        self
    }

    /// K² = k_MP² + k_PP².
    pub fn k_squared(&self) -> Complex64 {
        self.k_mp * self.k_mp + self.k_pp * self.k_pp
    }

    /// Real-valued k_PP when the indirect part is physical.
    pub fn k_pp_real(&self) -> Option<f64> {
        (self.k_pp.im == 0.0).then_some(self.k_pp.re)
    }

    /// Checks K_direct² against the micro-parameters, when present.
    pub fn micro_consistent(&self, rel_tol: f64) -> Option<bool> {
        self.micro.map(|m| {
            let direct = self.k_mp * self.k_mp;
            let micro = Complex64::new(m.k_squared(), 0.0);
            (direct - micro).norm() <= rel_tol * direct.norm().max(micro.norm()).max(1e-300)
        })
    }
}

/// K = sqrt(k_MP² + k_PP²), root with non-negative real part (non-negative
/// imaginary part when purely imaginary).
pub fn effective_coupling(d: &CouplingDecomposition) -> CouplingConstant {
    CouplingConstant::new_unbounded(principal_sqrt(d.k_squared()))
}

/// k_PP² = k_P1P2² + k_P1P3² + k_P2P3².
pub fn kpp_from_pairs(k12: f64, k13: f64, k23: f64) -> Result<f64> {
    if k12 < 0.0 || k13 < 0.0 || k23 < 0.0 {
        return Err(Error::Domain(
            "pairwise photon–photon constants must be non-negative".into(),
        ));
    }
    Ok((k12 * k12 + k13 * k13 + k23 * k23).sqrt())
}

/// Indirect coupling implied by a photon amplitude/phase profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndirectCoupling {
    /// Signed k_PP² = σ·k²·cos ψ.
    pub k_pp_sq: f64,
}

impl IndirectCoupling {
    pub fn k_pp(&self) -> Option<f64> {
        (self.k_pp_sq >= 0.0).then(|| self.k_pp_sq.sqrt())
    }
}

/// k_PP² ≃ σ·k²·cos ψ.
pub fn kpp_from_phase(k: f64, profile: &PhotonPhaseProfile) -> Result<IndirectCoupling> {
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("k must be non-negative, got {k}")));
    }
    Ok(IndirectCoupling {
        k_pp_sq: profile.sigma * k * k * profile.cos_psi(),
    })
}

/// Coupling of the magnon to one photon mode, plus the per-centre extras
/// used by the transmission model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoupling {
    pub decomposition: CouplingDecomposition,
    /// Coupling-induced magnon damping at this centre.
    pub alpha_cp: f64,
    /// Impedance-mismatch scale Γ_n.
    pub gamma: f64,
}

impl ModeCoupling {
    /// Γ_n defaults to 2β_n.
    pub fn new(decomposition: CouplingDecomposition, alpha_cp: f64, mode: &PhotonMode) -> Self {
        ModeCoupling {
            decomposition,
            alpha_cp,
            gamma: 2.0 * mode.beta_in,
        }
    }

    pub fn k_squared(&self) -> Complex64 {
        self.decomposition.k_squared()
    }
}

/// One magnon mode coupled to N photon modes.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSystem {
    magnon: MagnonParams,
    modes: Vec<PhotonMode>,
    couplings: Vec<ModeCoupling>,
}

impl HybridSystem {
    pub fn new(
        magnon: MagnonParams,
        modes: Vec<PhotonMode>,
        couplings: Vec<ModeCoupling>,
    ) -> Result<Self> {
        Self::build(magnon, modes, couplings, false)
    }

    /// Skips the |K| < 1 sanity bound.
    pub fn new_unbounded(
        magnon: MagnonParams,
        modes: Vec<PhotonMode>,
        couplings: Vec<ModeCoupling>,
    ) -> Result<Self> {
        Self::build(magnon, modes, couplings, true)
    }

    fn build(
        magnon: MagnonParams,
        modes: Vec<PhotonMode>,
        couplings: Vec<ModeCoupling>,
        unbounded: bool,
    ) -> Result<Self> {
        magnon.validate()?;
        if modes.is_empty() {
            return Err(Error::Config(
                "hybrid system needs at least one photon mode".into(),
            ));
        }
        if modes.len() != couplings.len() {
            return Err(Error::Config(format!(
                "{} photon modes but {} coupling entries",
                modes.len(),
                couplings.len()
            )));
        }
        for m in &modes {
            m.validate()?;
        }
        if modes.windows(2).any(|w| w[0].f_ghz >= w[1].f_ghz) {
            return Err(Error::Config(
                "photon modes must be sorted by ascending f_ghz".into(),
            ));
        }
        for (m, c) in modes.iter().zip(&couplings) {
            if !(c.alpha_cp >= 0.0) || !(c.gamma > 0.0) {
                return Err(Error::Config(format!(
                    "mode {}: alpha_cp must be ≥ 0 and gamma > 0",
                    m.label
                )));
            }
            let k = principal_sqrt(c.k_squared());
            if !unbounded {
                CouplingConstant::new(k)
                    .map_err(|e| Error::Config(format!("mode {}: {e}", m.label)))?;
            }
        }
        if modes.len() > 3 {
            log::warn!(
                "{} photon modes; the model was characterised for N ≤ 3",
                modes.len()
            );
        }
        Ok(HybridSystem {
            magnon,
            modes,
            couplings,
        })
    }

    /// The measured three-ring device with the fitted couplings
    /// K1 = 0.008i, K2 = 0.004i (α_cp = 0.01), K3 = 0.01 (α_cp = 2e-4),
    /// all with direct k_MP = 0.008i.
    pub fn measured_device() -> Self {
        let modes = default_modes();
        let couplings = default_center_couplings()
            .iter()
            .zip(&modes)
            .map(|(&(d, a), m)| ModeCoupling::new(d, a, m))
            .collect();
        HybridSystem::new(MagnonParams::default(), modes, couplings).expect("valid defaults")
    }

    pub fn magnon(&self) -> &MagnonParams {
        &self.magnon
    }

    pub fn modes(&self) -> &[PhotonMode] {
        &self.modes
    }

    pub fn couplings(&self) -> &[ModeCoupling] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn with_magnon(mut self, magnon: MagnonParams) -> Self {
        self.magnon = magnon;
        self
    }

    /// Replaces every coupling with the uncoupled one, keeping damping.
    pub fn decoupled(mut self) -> Self {
        for c in &mut self.couplings {
            c.decomposition = CouplingDecomposition::uncoupled();
        }
        self
    }

    /// Magnon parameters seen by centre `n`: α_cp of that centre.
    pub fn center_magnon(&self, n: usize) -> MagnonParams {
        self.magnon.with_alpha_cp(self.couplings[n].alpha_cp)
    }

    /// N = 1 system for centre `n`, with the centre's α_cp on the magnon.
    pub fn single_center(&self, n: usize) -> HybridSystem {
        HybridSystem {
            magnon: self.center_magnon(n),
            modes: vec![self.modes[n].clone()],
            couplings: vec![self.couplings[n]],
        }
    }
}

/// Default per-centre (decomposition, α_cp). k_PP is chosen so that K
/// reproduces the fitted K_n exactly given k_MP = 0.008i.
pub fn default_center_couplings() -> [(CouplingDecomposition, f64); 3] {
    let k_mp = Complex64::new(0.0, 0.008);
    let kpp_for = |k_sq: f64| k_sq + 0.008 * 0.008;
    [
        (
            CouplingDecomposition::from_kpp_squared(k_mp, kpp_for(-0.008 * 0.008)),
            0.0,
        ),
        (
            CouplingDecomposition::from_kpp_squared(k_mp, kpp_for(-0.004 * 0.004)),
            0.01,
        ),
        (
            CouplingDecomposition::from_kpp_squared(k_mp, kpp_for(0.01 * 0.01)),
            2e-4,
        ),
    ]
}

/// k_PP values quoted alongside the fitted constants (0, 0.005, 0.013).
pub const REPORTED_KPP: [f64; 3] = [0.0, 0.005, 0.013];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn effective_coupling_examples() {
        let k1 = effective_coupling(&CouplingDecomposition::new(c(0.0, 0.008), 0.0));
        assert!((k1.value() - c(0.0, 0.008)).norm() < 1e-18);

        let k3 = effective_coupling(&CouplingDecomposition::new(c(0.0, 0.008), 0.013));
        let expect = (1.69e-4f64 - 6.4e-5).sqrt();
        assert!((k3.value().re - expect).abs() < 1e-15);
        assert_eq!(k3.value().im, 0.0);
        assert!((k3.value().re - 0.01025).abs() < 1e-5);

        let k = effective_coupling(&CouplingDecomposition::new(c(0.0, 0.0), 0.007));
        assert_eq!(k.value(), c(0.007, 0.0));
    }

    #[test]
    fn kpp_pairs() {
        assert_eq!(kpp_from_pairs(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((kpp_from_pairs(0.003, 0.004, 0.0).unwrap() - 0.005).abs() < 1e-15);
        let v = kpp_from_pairs(0.005, 0.005, 0.005).unwrap();
        assert!((v - 3f64.sqrt() * 0.005).abs() < 1e-15);
        assert!((v - 0.00866).abs() < 1e-5);
        assert!(kpp_from_pairs(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn kpp_phase() {
        let orth = kpp_from_phase(0.02, &PhotonPhaseProfile::new(2.0, 90.0).unwrap()).unwrap();
        assert!(orth.k_pp_sq.abs() < 1e-19);
        let inphase = kpp_from_phase(0.02, &PhotonPhaseProfile::new(2.0, 0.0).unwrap()).unwrap();
        assert!((inphase.k_pp_sq - 8e-4).abs() < 1e-18);
        assert!((inphase.k_pp().unwrap() - 0.028284271247461905).abs() < 1e-15);
        let anti = kpp_from_phase(0.02, &PhotonPhaseProfile::new(2.0, 180.0).unwrap()).unwrap();
        assert!((anti.k_pp_sq + 8e-4).abs() < 1e-18);
        assert!(anti.k_pp().is_none());
        // the signed square survives in a decomposition
        let d = CouplingDecomposition::from_kpp_squared(c(0.0, 0.0), anti.k_pp_sq);
        assert!((d.k_squared() - c(-8e-4, 0.0)).norm() < 1e-18);
    }

    #[test]
    fn micro_parameters() {
        let m = MicroCoupling::Rates {
            k_c: 0.003,
            k_d: 0.005,
        };
        assert!((m.k_squared() + 1.6e-5).abs() < 1e-18);
        assert!((m.k_direct() - c(0.0, 0.004)).norm() < 1e-15);
        let d = CouplingDecomposition::new(c(0.0, 0.004), 0.0).with_micro(m);
        assert_eq!(d.micro_consistent(1e-9), Some(true));
        let ind = MicroCoupling::Induction {
            k_f: 0.01,
            k_a: 0.002,
            k_l: 0.0084,
        };
        assert!((ind.k_squared() + 6.4e-5).abs() < 1e-15);
        let d = CouplingDecomposition::new(c(0.0, 0.008), 0.0).with_micro(ind);
        assert_eq!(d.micro_consistent(1e-9), Some(true));
    }

    #[test]
    fn coupling_bound() {
        assert!(CouplingConstant::real(0.5).is_ok());
        assert!(CouplingConstant::real(1.5).is_err());
        assert_eq!(CouplingConstant::new_unbounded(c(2.0, 0.0)).value().re, 2.0);
    }

    #[test]
    fn default_system_reproduces_fitted_constants() {
        let sys = HybridSystem::measured_device();
        let ks: Vec<_> = sys
            .couplings()
            .iter()
            .map(|c| effective_coupling(&c.decomposition).value())
            .collect();
        assert!((ks[0] - c(0.0, 0.008)).norm() < 1e-15);
        assert!((ks[1] - c(0.0, 0.004)).norm() < 1e-15);
        assert!((ks[2] - c(0.01, 0.0)).norm() < 1e-15);
        assert!((sys.couplings()[0].gamma - 4.6e-3).abs() < 1e-15);
    }

    #[test]
    fn system_validation() {
        let sys = HybridSystem::measured_device();
        let mut modes = sys.modes().to_vec();
        modes.swap(0, 1);
        let err = HybridSystem::new(*sys.magnon(), modes, sys.couplings().to_vec());
        assert!(err.is_err());
        let err = HybridSystem::new(*sys.magnon(), sys.modes().to_vec(), vec![]);
        assert!(err.is_err());
        let err = HybridSystem::new(*sys.magnon(), vec![], vec![]);
        assert!(err.is_err());
        let mut strong = sys.couplings().to_vec();
        strong[0].decomposition = CouplingDecomposition::new(c(0.0, 0.0), 2.0);
        assert!(HybridSystem::new(*sys.magnon(), sys.modes().to_vec(), strong.clone()).is_err());
        assert!(HybridSystem::new_unbounded(*sys.magnon(), sys.modes().to_vec(), strong).is_ok());
    }

    proptest! {
        #[test]
        fn effective_coupling_squares_back(re in -0.05f64..0.05, im in -0.05f64..0.05, kpp in 0.0f64..0.05) {
            let d = CouplingDecomposition::new(c(re, im), kpp);
            let k = effective_coupling(&d).value();
            prop_assert!((k * k - d.k_squared()).norm() <= 1e-15);
            prop_assert!(k.re > 0.0 || (k.re == 0.0 && k.im >= 0.0));
        }
    }
}
