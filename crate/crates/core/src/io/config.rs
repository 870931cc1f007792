//! TOML run configuration with dotted-key overrides.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::coupling::{
    kpp_from_pairs, CouplingDecomposition, HybridSystem, MicroCoupling, ModeCoupling,
};
use crate::fitting::FitOptions;
use crate::magnon::MagnonParams;
use crate::phasemap::{PhaseDiagramSpec, DEFAULT_TOL};
use crate::photon::{Lumped, PhotonMode, PhotonPhaseProfile};
use crate::transmission::{SweepGrid, Variant};
use crate::{Error, Result};

/// Bundled configuration: the measured three-ring device.
pub const DEFAULT_CONFIG: &str = include_str!("../../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnonSection {
    /// γ/2π in GHz/T.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_over_2pi: Option<f64>,
    /// γ in rad/(T·s); alternative to `gamma_over_2pi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub mu0_ms: f64,
    pub alpha_in: f64,
    /// Magnon α_cp used by the multimode model.
    #[serde(default)]
    pub alpha_cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lumped: Option<Lumped>,
    /// Impedance-mismatch scale Γ_n; defaults to 2β_n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Relative amplitude σ (linear).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Phase ψ in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_deg: Option<f64>,
}

/// A complex number written either as a plain real number or `{ re, im }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Parts {
        #[serde(default)]
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl ComplexInput {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexInput::Real(x) => Complex64::new(x, 0.0),
            ComplexInput::Parts { re, im } => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    /// Direct magnon–photon constant. Zero also switches off the indirect
    /// part for this mode.
    pub k_mp: ComplexInput,
    /// Indirect constant k_PP (≥ 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pp: Option<f64>,
    /// Signed k_PP²; alternative to `k_pp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pp_sq: Option<f64>,
    /// Pairwise photon–photon constants; alternative to `k_pp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pairs: Option<[f64; 3]>,
    #[serde(default)]
    pub alpha_cp: f64,
    /// Quoted k_PP compared against the decomposition of fitted K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_k_pp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro: Option<MicroCoupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KittelSection {
    pub field_range: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// μ0H range in T.
    pub field_range: [f64; 2],
    /// Frequency range in GHz.
    pub freq_range: [f64; 2],
    pub field_points: usize,
    pub freq_points: usize,
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    /// Half width of the field window around each centre (T).
    pub half_width: f64,
    pub points: usize,
    /// Also write the tracked multimode roots over the sweep field range.
    #[serde(default)]
    pub multimode: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramSection {
    /// One diagram per (σ, k) pair of these lists.
    pub sigma: Vec<f64>,
    pub k: Vec<f64>,
    pub psi_range: [f64; 2],
    pub psi_points: usize,
    pub d_range: [f64; 2],
    pub d_points: usize,
    pub f_p: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Label of the photon mode whose centre is fitted.
    pub mode: usize,
    /// Ridge CSV to fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridges: Option<String>,
    /// Spectrum CSV to extract ridges from (with `window`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<String>,
    /// Frequency window for ridge extraction (GHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Field window half width for synthetic ridges (T).
    pub half_width: f64,
    pub points: usize,
    /// Gaussian noise on synthetic ridges in units of β_in·f_n.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub magnon: MagnonSection,
    pub modes: Vec<ModeSection>,
    pub couplings: Vec<CouplingSection>,
    pub kittel: KittelSection,
    pub sweep: SweepSection,
    pub dispersion: DispersionSection,
    pub phase_diagram: PhaseDiagramSection,
    pub fit: FitSection,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_toml_str(DEFAULT_CONFIG, &[]).expect("bundled config is valid")
    }
}

/// Reads, overrides and validates a configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    load_config_with(path, &[])
}

pub fn load_config_with(path: &Path, overrides: &[String]) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_toml_str(&text, overrides)
        .map_err(|e| with_context(e, &path.display().to_string()))
}

fn with_context(e: Error, ctx: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
        other => other,
    }
}

impl Config {
    /// Parses `text`, applies `KEY=VALUE` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Config> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        // Re-parse from text so schema errors carry line and key context.
        let resolved = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: Config = toml::from_str(&resolved).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        let range = |name: &str, r: [f64; 2], pts: usize| -> Result<()> {
            if !(r[0].is_finite() && r[1].is_finite()) || pts == 0 || (pts > 1 && !(r[0] < r[1])) {
                return Err(Error::Config(format!(
                    "{name}: need finite increasing range and ≥ 1 point, got {r:?} with {pts}"
                )));
            }
            Ok(())
        };
        range(
            "kittel.field_range",
            self.kittel.field_range,
            self.kittel.points,
        )?;
        if self.kittel.field_range[0] < 0.0 {
            return Err(Error::Config(
                "kittel.field_range must be non-negative".into(),
            ));
        }
        self.sweep_grid(None)?;
        if self.sweep.variants.is_empty() {
            return Err(Error::Config("sweep.variants must not be empty".into()));
        }
        if !(self.dispersion.half_width > 0.0) || self.dispersion.points < 2 {
            return Err(Error::Config(
                "dispersion: half_width > 0 and points ≥ 2 required".into(),
            ));
        }
        let pd = &self.phase_diagram;
        if pd.sigma.is_empty() || pd.k.is_empty() {
            return Err(Error::Config(
                "phase_diagram.sigma and .k must not be empty".into(),
            ));
        }
        if pd.sigma.iter().chain(&pd.k).any(|v| !(*v >= 0.0)) || !(pd.tol > 0.0) || !(pd.f_p > 0.0)
        {
            return Err(Error::Config(
                "phase_diagram: sigma, k ≥ 0, tol > 0, f_p > 0".into(),
            ));
        }
        range(
            "phase_diagram.psi_range",
            pd.psi_range,
            pd.psi_points.max(2),
        )?;
        range("phase_diagram.d_range", pd.d_range, pd.d_points.max(2))?;
        if pd.psi_points < 2 || pd.d_points < 2 || pd.d_range[0] < 0.0 {
            return Err(Error::Config(
                "phase_diagram: ≥ 2 points per axis, d ≥ 0".into(),
            ));
        }
        if !self.modes.iter().any(|m| m.label == self.fit.mode) {
            return Err(Error::Config(format!(
                "fit.mode = {} names no photon mode",
                self.fit.mode
            )));
        }
        if !(self.fit.half_width > 0.0) || self.fit.points < 4 || !(self.fit.noise >= 0.0) {
            return Err(Error::Config(
                "fit: half_width > 0, points ≥ 4, noise ≥ 0".into(),
            ));
        }
        Ok(())
    }

    pub fn magnon(&self) -> Result<MagnonParams> {
        let m = &self.magnon;
        match (m.gamma_over_2pi, m.gamma) {
            (Some(g), None) => MagnonParams::new(g, m.mu0_ms, m.alpha_in, m.alpha_cp),
            (None, Some(g)) => MagnonParams::from_gamma(g, m.mu0_ms, m.alpha_in, m.alpha_cp),
            (None, None) => MagnonParams::new(28.0, m.mu0_ms, m.alpha_in, m.alpha_cp),
            (Some(_), Some(_)) => Err(Error::Config(
                "magnon: give either gamma_over_2pi or gamma, not both".into(),
            )),
        }
    }

    pub fn modes(&self) -> Result<Vec<PhotonMode>> {
        if self.modes.is_empty() {
            return Err(Error::Config(
                "modes: at least one photon mode is required".into(),
            ));
        }
        self.modes
            .iter()
            .map(|m| {
                let mode = match (m.lumped, m.f_ghz, m.beta_in) {
                    (Some(lc), None, None) => PhotonMode::from_lumped(m.label, lc)?,
                    (lumped, Some(f), Some(b)) => {
                        let mode = PhotonMode {
                            label: m.label,
                            f_ghz: f,
                            beta_in: b,
                            lumped,
                        };
                        mode.validate()?;
                        mode
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "modes[label={}]: give f_ghz and beta_in, or lumped",
                            m.label
                        )))
                    }
                };
                Ok(mode)
            })
            .collect()
    }

    pub fn profiles(&self) -> Result<Vec<Option<PhotonPhaseProfile>>> {
        self.modes
            .iter()
            .map(|m| match (m.sigma, m.psi_deg) {
                (Some(s), Some(p)) => PhotonPhaseProfile::new(s, p).map(Some),
                (None, None) => Ok(None),
                _ => Err(Error::Config(format!(
                    "modes[label={}]: sigma and psi_deg go together",
                    m.label
                ))),
            })
            .collect()
    }

    pub fn system(&self) -> Result<HybridSystem> {
        let magnon = self.magnon()?;
        let modes = self.modes()?;
        self.profiles()?;
        if self.couplings.len() != modes.len() {
            return Err(Error::Config(format!(
                "couplings: {} entries for {} modes",
                self.couplings.len(),
                modes.len()
            )));
        }
        let couplings = self
            .couplings
            .iter()
            .zip(&self.modes)
            .zip(&modes)
            .map(|((c, ms), mode)| {
                let k_mp = c.k_mp.value();
                let mut d = match (c.k_pp, c.k_pp_sq, c.k_pairs) {
                    (Some(k), None, None) if k >= 0.0 => CouplingDecomposition::new(k_mp, k),
                    (None, Some(sq), None) => CouplingDecomposition::from_kpp_squared(k_mp, sq),
                    (None, None, Some([a, b, c])) => {
                        CouplingDecomposition::new(k_mp, kpp_from_pairs(a, b, c)?)
                    }
                    (None, None, None) => CouplingDecomposition::new(k_mp, 0.0),
                    _ => {
                        return Err(Error::Config(format!(
                            "couplings[mode {}]: give one of k_pp (≥ 0), k_pp_sq, k_pairs",
                            ms.label
                        )))
                    }
                };
                // The indirect path runs through the magnon's own coupling to
                // this mode, so it vanishes with k_MP.
                if k_mp.norm() == 0.0 && d.k_squared().norm() != 0.0 {
                    log::info!("mode {}: k_mp = 0 disables the indirect coupling", ms.label);
                    d = CouplingDecomposition::uncoupled();
                }
                if let Some(micro) = c.micro {
                    d = d.with_micro(micro);
                }
                if !(c.alpha_cp >= 0.0) {
                    return Err(Error::Config(format!(
                        "couplings[mode {}]: alpha_cp must be non-negative, got {}",
                        ms.label, c.alpha_cp
                    )));
                }
                let mut mc = ModeCoupling::new(d, c.alpha_cp, mode);
                if let Some(g) = ms.gamma {
                    mc.gamma = g;
                }
                Ok(mc)
            })
            .collect::<Result<Vec<_>>>()?;
        HybridSystem::new(magnon, modes, couplings)
    }

    /// Index of the mode with `label`.
    pub fn mode_index(&self, label: usize) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::Config(format!("no photon mode labelled {label}")))
    }

    /// Sweep grid, with an optional (field points, freq points) override.
    pub fn sweep_grid(&self, shape: Option<(usize, usize)>) -> Result<SweepGrid> {
        let s = &self.sweep;
        let (nf, nw) = shape.unwrap_or((s.field_points, s.freq_points));
        SweepGrid::linspace(
            (s.field_range[0], s.field_range[1]),
            nf,
            (s.freq_range[0], s.freq_range[1]),
            nw,
        )
        .map_err(|e| with_context(e, "sweep"))
    }

    /// One spec per (σ, k) combination, σ-major.
    pub fn phase_diagram_specs(&self, shape: Option<(usize, usize)>) -> Vec<PhaseDiagramSpec> {
        let pd = &self.phase_diagram;
        let (nd, npsi) = shape.unwrap_or((pd.d_points, pd.psi_points));
        pd.sigma
            .iter()
            .flat_map(|&sigma| {
                pd.k.iter().map(move |&k| PhaseDiagramSpec {
                    sigma,
                    k,
                    psi_range: pd.psi_range,
                    psi_points: npsi,
                    d_range: pd.d_range,
                    d_points: nd,
                    f_p: pd.f_p,
                    tol: pd.tol,
                })
            })
            .collect()
    }

    /// Canonical TOML of the resolved configuration.
    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 (hex) of [`Config::snapshot`].
    pub fn snapshot_hash(&self) -> String {
        Sha256::digest(self.snapshot().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Applies `a.b.c=value`. Keys match case-insensitively, `*` matches every
/// array element or table entry, and the value is parsed as TOML (bare
/// words fall back to strings). Integers replacing floats become floats.
pub fn apply_override(root: &mut Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').map(str::trim).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!(
            "override {spec:?} has an empty key segment"
        )));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let hits = set_path(root, &path, &value, key)?;
    if hits == 0 {
        return Err(Error::Config(format!("override {key:?} matched nothing")));
    }
    Ok(())
}

fn set_path(table: &mut Table, path: &[&str], value: &Value, full: &str) -> Result<usize> {
    let (head, rest) = path.split_first().expect("non-empty path");
    let keys: Vec<String> = if *head == "*" {
        table.keys().cloned().collect()
    } else {
        let found = table.keys().find(|k| k.eq_ignore_ascii_case(head)).cloned();
        vec![found.unwrap_or_else(|| head.to_ascii_lowercase())]
    };
    let mut hits = 0;
    for k in keys {
        if rest.is_empty() {
            let new = coerce(table.get(&k), value.clone());
            table.insert(k, new);
            hits += 1;
            continue;
        }
        match table.get_mut(&k) {
            Some(Value::Table(t)) => hits += set_path(t, rest, value, full)?,
            Some(Value::Array(items)) => hits += set_array(items, rest, value, full)?,
            Some(_) => {
                return Err(Error::Config(format!(
                    "override {full:?}: {k} is not a table"
                )));
            }
            None => {
                return Err(Error::Config(format!(
                    "override {full:?}: unknown key {k:?}"
                )));
            }
        }
    }
    Ok(hits)
}

fn set_array(items: &mut [Value], path: &[&str], value: &Value, full: &str) -> Result<usize> {
    let (head, rest) = path.split_first().expect("non-empty path");
    let idx: Vec<usize> = if *head == "*" {
        (0..items.len()).collect()
    } else {
        let i: usize = head.parse().map_err(|_| {
            Error::Config(format!("override {full:?}: {head:?} is not an index or *"))
        })?;
        if i >= items.len() {
            return Err(Error::Config(format!(
                "override {full:?}: index {i} out of range"
            )));
        }
        vec![i]
    };
    let mut hits = 0;
    for i in idx {
        if rest.is_empty() {
            items[i] = coerce(Some(&items[i]), value.clone());
            hits += 1;
            continue;
        }
        match &mut items[i] {
            Value::Table(t) => hits += set_path(t, rest, value, full)?,
            Value::Array(a) => hits += set_array(a, rest, value, full)?,
            _ => {
                return Err(Error::Config(format!(
                    "override {full:?}: element {i} is not a table"
                )))
            }
        }
    }
    Ok(hits)
}

fn coerce(old: Option<&Value>, new: Value) -> Value {
    match (old, new) {
        (Some(Value::Integer(_)), v) => v,
        (_, Value::Integer(i)) => Value::Float(i as f64),
        (_, Value::Array(a)) => Value::Array(
            a.into_iter()
                .map(|v| match v {
                    Value::Integer(i) => Value::Float(i as f64),
                    v => v,
                })
                .collect(),
        ),
        (_, v) => v,
    }
}
