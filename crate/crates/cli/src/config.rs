//! Run configuration: one strict schema per scenario, merged from an optional
//! JSON file and `--key value` overrides. Keys carry their unit as a suffix.

#![allow(non_snake_case)]

use std::collections::BTreeSet;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Eos,
    Bubble,
    Spectrum,
    Drive,
    TwoPhoton,
    Cavity,
    Entangle,
    Expand2s,
}

impl ScenarioName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Eos => "eos",
            Self::Bubble => "bubble",
            Self::Spectrum => "spectrum",
            Self::Drive => "drive",
            Self::TwoPhoton => "two-photon",
            Self::Cavity => "cavity",
            Self::Entangle => "entangle",
            Self::Expand2s => "expand2s",
        }
    }
}

/// Linear sweep `{start, stop, count}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64).collect(),
        }
    }

    fn validate(&self, key: &str) -> Result<(), RunError> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(RunError::Validation(format!("{key}: need count ≥ 1 and finite start/stop")));
        }
        Ok(())
    }
}

fn default_pressure() -> f64 {
    25.0
}
fn default_r_max() -> f64 {
    8.0
}
fn default_points() -> usize {
    2048
}
fn default_scattering_length() -> f64 {
    heliox_core::dft::params::DEFAULT_SCATTERING_LENGTH
}
fn default_pressure_sweep() -> Sweep {
    Sweep { start: 0.0, stop: 50.0, count: 11 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosConfig {
    #[serde(default = "default_pressure_sweep")]
    pub pressure_sweep_bar: Sweep,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleConfig {
    #[serde(default = "default_pressure")]
    pub pressure_bar: f64,
    /// When set, every pressure of the sweep is relaxed and `pressure_bar` is
    /// ignored.
    #[serde(default)]
    pub pressure_sweep_bar: Option<Sweep>,
    #[serde(default = "default_r_max")]
    pub grid_r_max_nm: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
    #[serde(default = "BubbleConfig::default_tolerance")]
    pub tolerance_eV: f64,
    #[serde(default = "BubbleConfig::default_iterations")]
    pub max_iterations: usize,
}

impl BubbleConfig {
    fn default_tolerance() -> f64 {
        1e-8
    }
    fn default_iterations() -> usize {
        200_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_pressure")]
    pub pressure_bar: f64,
    #[serde(default = "default_r_max")]
    pub grid_r_max_nm: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
    #[serde(default = "SpectrumConfig::default_l_max")]
    pub l_max: usize,
    #[serde(default = "SpectrumConfig::default_n_max")]
    pub n_max: usize,
}

impl SpectrumConfig {
    fn default_l_max() -> usize {
        3
    }
    fn default_n_max() -> usize {
        3
    }
}

/// Pulse presets for the fig3a-c outputs: (W fs, ℰ V/nm).
pub const DRIVE_PANELS: [(&str, f64, f64); 3] = [("a", 100.0, 0.1), ("b", 200.0, 0.1012), ("c", 200.0, 0.0085)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default = "default_pressure")]
    pub pressure_bar: f64,
    #[serde(default = "default_r_max")]
    pub grid_r_max_nm: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
    /// Pulse intensity FWHM, fs.
    #[serde(default, alias = "pulse_W_fs")]
    pub W_fs: Option<f64>,
    /// Peak field, V/nm.
    #[serde(default, alias = "pulse_E_VperNm")]
    pub E_VperNm: Option<f64>,
    /// `a`, `b` or `c`: take W and ℰ from that preset unless given.
    #[serde(default)]
    pub panel: Option<String>,
    /// Carrier photon energy, eV; resonant with the target transition if unset.
    #[serde(default)]
    pub carrier_eV: Option<f64>,
    #[serde(default)]
    pub dt_fs: Option<f64>,
    #[serde(default = "DriveConfig::default_stride")]
    pub stride: usize,
}

impl DriveConfig {
    fn default_stride() -> usize {
        20
    }

    /// (W, ℰ) after applying the panel preset.
    pub fn pulse(&self) -> Result<(f64, f64), RunError> {
        let preset = match self.panel.as_deref() {
            None => None,
            Some(p) => Some(
                DRIVE_PANELS
                    .iter()
                    .find(|(name, _, _)| *name == p)
                    .ok_or_else(|| RunError::Validation(format!("panel must be a, b or c, got {p:?}")))?,
            ),
        };
        let w = self.W_fs.or(preset.map(|p| p.1)).unwrap_or(100.0);
        let e = self.E_VperNm.or(preset.map(|p| p.2)).unwrap_or(0.1);
        Ok((w, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPhotonConfig {
    #[serde(default = "default_pressure")]
    pub pressure_bar: f64,
    #[serde(default = "default_r_max")]
    pub grid_r_max_nm: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
    #[serde(default = "TwoPhotonConfig::default_w", alias = "pulse_W_fs")]
    pub W_fs: f64,
    #[serde(default = "TwoPhotonConfig::default_e", alias = "pulse_E_VperNm")]
    pub E_VperNm: f64,
    #[serde(default)]
    pub dt_fs: Option<f64>,
    #[serde(default = "DriveConfig::default_stride")]
    pub stride: usize,
}

impl TwoPhotonConfig {
    fn default_w() -> f64 {
        200.0
    }
    fn default_e() -> f64 {
        0.05
    }
}

fn default_transition() -> f64 {
    heliox_core::scenarios::prolate::TRANSITION_EV
}
fn default_coupling() -> f64 {
    heliox_core::scenarios::prolate::COUPLING_GHZ
}
fn default_kappa() -> f64 {
    heliox_core::scenarios::prolate::KAPPA_GHZ
}
fn default_gamma_r() -> f64 {
    heliox_core::scenarios::prolate::GAMMA_R_PER_S
}
fn default_gamma_nr() -> f64 {
    heliox_core::scenarios::prolate::GAMMA_NR_GHZ
}
fn default_photon_dim() -> usize {
    2
}
fn default_samples() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    /// 1S→1P energy of the prolate bubble, eV.
    #[serde(default = "default_transition")]
    pub transition_eV: f64,
    /// g/2π, GHz.
    #[serde(default = "default_coupling")]
    pub coupling_GHz: f64,
    #[serde(default = "default_kappa")]
    pub kappa_GHz: f64,
    #[serde(default = "default_gamma_r")]
    pub gamma_r_per_s: f64,
    /// ω_1P − ω_1S − ω_c over 2π, GHz.
    #[serde(default)]
    pub detuning_GHz: f64,
    /// Dipole used to quote the single-photon field, e·nm.
    #[serde(default = "CavityConfig::default_dipole")]
    pub dipole_enm: f64,
    #[serde(default = "default_photon_dim")]
    pub photon_dim: usize,
    #[serde(default)]
    pub frame: heliox_core::scenarios::Frame,
    #[serde(default = "CavityConfig::default_t_end")]
    pub t_end_ps: f64,
    #[serde(default)]
    pub dt_fs: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl CavityConfig {
    fn default_dipole() -> f64 {
        heliox_core::scenarios::prolate::DIPOLE_ENM
    }
    fn default_t_end() -> f64 {
        500.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingPreset {
    /// g_α = g_β = g.
    Even,
    /// The initially excited bubble couples at g/2.
    Uneven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleConfig {
    #[serde(default = "EntangleConfig::default_coupling")]
    pub coupling: CouplingPreset,
    /// Override the preset couplings g/2π, GHz.
    #[serde(default)]
    pub g_alpha_GHz: Option<f64>,
    #[serde(default)]
    pub g_beta_GHz: Option<f64>,
    #[serde(default = "default_transition")]
    pub transition_eV: f64,
    #[serde(default = "default_kappa")]
    pub kappa_GHz: f64,
    #[serde(default = "default_gamma_r")]
    pub gamma_r_per_s: f64,
    #[serde(default = "default_gamma_nr")]
    pub gamma_nr_GHz: f64,
    #[serde(default = "default_photon_dim")]
    pub photon_dim: usize,
    #[serde(default = "EntangleConfig::default_frame")]
    pub frame: heliox_core::scenarios::Frame,
    #[serde(default = "EntangleConfig::default_t_end")]
    pub t_end_ns: f64,
    #[serde(default)]
    pub dt_fs: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub initial: heliox_core::scenarios::InitialExcitation,
    /// Project onto coupling-weighted bright/dark states instead of (|eg⟩ ± |ge⟩)/√2.
    #[serde(default)]
    pub weighted_projections: bool,
}

impl EntangleConfig {
    fn default_coupling() -> CouplingPreset {
        CouplingPreset::Even
    }
    fn default_frame() -> heliox_core::scenarios::Frame {
        heliox_core::scenarios::Frame::Rotating
    }
    fn default_t_end() -> f64 {
        1.0
    }

    /// (g_α, g_β) over 2π in GHz.
    pub fn couplings_ghz(&self) -> (f64, f64) {
        let g = default_coupling();
        let (a, b) = match self.coupling {
            CouplingPreset::Even => (g, g),
            CouplingPreset::Uneven => (0.5 * g, g),
        };
        (self.g_alpha_GHz.unwrap_or(a), self.g_beta_GHz.unwrap_or(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expand2sConfig {
    #[serde(default = "default_pressure")]
    pub pressure_bar: f64,
    #[serde(default = "Expand2sConfig::default_r_max")]
    pub grid_r_max_nm: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_scattering_length")]
    pub scattering_length_nm: f64,
    #[serde(default = "Expand2sConfig::default_t_end")]
    pub t_end_ps: f64,
    #[serde(default = "Expand2sConfig::default_dt")]
    pub dt_fs: f64,
    #[serde(default = "Expand2sConfig::default_sample")]
    pub sample_fs: f64,
    /// 0 disables the absorbing layer.
    #[serde(default = "Expand2sConfig::default_layer_width")]
    pub layer_width_nm: f64,
    #[serde(default = "Expand2sConfig::default_layer_rate")]
    pub layer_rate_per_ps: f64,
}

impl Expand2sConfig {
    fn default_r_max() -> f64 {
        16.0
    }
    fn default_t_end() -> f64 {
        20.0
    }
    fn default_dt() -> f64 {
        0.5
    }
    fn default_sample() -> f64 {
        10.0
    }
    fn default_layer_width() -> f64 {
        4.0
    }
    fn default_layer_rate() -> f64 {
        2.0
    }
}

/// A validated configuration for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Eos(EosConfig),
    Bubble(BubbleConfig),
    Spectrum(SpectrumConfig),
    Drive(DriveConfig),
    TwoPhoton(TwoPhotonConfig),
    Cavity(CavityConfig),
    Entangle(EntangleConfig),
    Expand2s(Expand2sConfig),
}

/// Config plus bookkeeping for the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenario: ScenarioName,
    pub config: ScenarioConfig,
    /// The fully resolved config as JSON.
    pub echo: Value,
    /// Keys that took their default value.
    pub defaults_filled: Vec<String>,
}

/// Read a config file; it must hold a JSON object.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::Validation(format!("config {} is not valid JSON: {e}", path.display())))?;
    match value {
        Value::Object(map) => Ok(map),
        other => Err(RunError::Validation(format!("config {} must be a JSON object, found {other}", path.display()))),
    }
}

/// Turn `--some-key value` pairs into JSON entries. Values are parsed as JSON
/// when possible and kept as strings otherwise.
pub fn parse_overrides(args: &[String]) -> Result<Map<String, Value>, RunError> {
    let mut map = Map::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .filter(|k| !k.is_empty())
            .ok_or_else(|| RunError::Validation(format!("expected --key value, found {flag:?}")))?;
        let (key, raw) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| RunError::Validation(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        let key = key.replace('-', "_");
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        map.insert(key, value);
    }
    Ok(map)
}

fn typed<T: serde::de::DeserializeOwned + Serialize>(map: Map<String, Value>) -> Result<(T, Value), RunError> {
    let cfg: T = serde_json::from_value(Value::Object(map)).map_err(|e| RunError::Validation(e.to_string()))?;
    let echo = serde_json::to_value(&cfg).map_err(|e| RunError::Validation(e.to_string()))?;
    Ok((cfg, echo))
}

/// Merge file and overrides (overrides win) and validate against the
/// scenario schema.
pub fn resolve(
    scenario: ScenarioName,
    file: Option<Map<String, Value>>,
    overrides: Map<String, Value>,
) -> Result<ResolvedConfig, RunError> {
    let mut merged = file.unwrap_or_default();
    if let Some(name) = merged.remove("scenario") {
        if name.as_str() != Some(scenario.as_str()) {
            return Err(RunError::Validation(format!(
                "config is for scenario {name}, but `{}` was requested",
                scenario.as_str()
            )));
        }
    }
    merged.extend(overrides);
    let explicit: BTreeSet<String> = merged.keys().cloned().collect();
    let (config, echo) = match scenario {
        ScenarioName::Eos => {
            let (c, e): (EosConfig, _) = typed(merged)?;
            c.pressure_sweep_bar.validate("pressure_sweep_bar")?;
            (ScenarioConfig::Eos(c), e)
        }
        ScenarioName::Bubble => {
            let (c, e): (BubbleConfig, _) = typed(merged)?;
            if let Some(s) = &c.pressure_sweep_bar {
                s.validate("pressure_sweep_bar")?;
            }
            (ScenarioConfig::Bubble(c), e)
        }
        ScenarioName::Spectrum => {
            let (c, e) = typed(merged)?;
            (ScenarioConfig::Spectrum(c), e)
        }
        ScenarioName::Drive => {
            let (mut c, _): (DriveConfig, _) = typed(merged)?;
            let (w, e) = c.pulse()?;
            c.W_fs = Some(w);
            c.E_VperNm = Some(e);
            let echo = serde_json::to_value(&c).map_err(|e| RunError::Validation(e.to_string()))?;
            (ScenarioConfig::Drive(c), echo)
        }
        ScenarioName::TwoPhoton => {
            let (c, e) = typed(merged)?;
            (ScenarioConfig::TwoPhoton(c), e)
        }
        ScenarioName::Cavity => {
            let (c, e) = typed(merged)?;
            (ScenarioConfig::Cavity(c), e)
        }
        ScenarioName::Entangle => {
            let (mut c, _): (EntangleConfig, _) = typed(merged)?;
            let (a, b) = c.couplings_ghz();
            c.g_alpha_GHz = Some(a);
            c.g_beta_GHz = Some(b);
            let echo = serde_json::to_value(&c).map_err(|e| RunError::Validation(e.to_string()))?;
            (ScenarioConfig::Entangle(c), echo)
        }
        ScenarioName::Expand2s => {
            let (c, e) = typed(merged)?;
            (ScenarioConfig::Expand2s(c), e)
        }
    };
    // aliases count as explicit for their canonical key
    let explicit: BTreeSet<String> =
        explicit.into_iter().map(|k| k.strip_prefix("pulse_").map(str::to_string).unwrap_or(k)).collect();
    let defaults_filled = echo
        .as_object()
        .map(|m| m.keys().filter(|k| !explicit.contains(*k)).cloned().collect())
        .unwrap_or_default();
    Ok(ResolvedConfig { scenario, config, echo, defaults_filled })
}
