//! Calibrated functional coefficients with provenance, shipped as
//! `params.defaults.json` and overridable through `HELIOX_DEFAULTS`.

use std::collections::BTreeMap;

use heliox_core::dft::{calibrate_params, DftParams, SaturationTargets};
use heliox_core::units::{M_E, M_HE};
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const ENV_VAR: &str = "HELIOX_DEFAULTS";
pub const SCHEMA_VERSION: u32 = 1;

const SHIPPED: &str = include_str!("../params.defaults.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    pub density_nm3: f64,
    #[serde(rename = "chemical_potential_eV")]
    pub chemical_potential_ev: f64,
    pub sound_speed_m_s: f64,
    #[serde(rename = "surface_tension_eV_nm2")]
    pub surface_tension_ev_nm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(rename = "g2_eV_nm3")]
    pub g2: f64,
    #[serde(rename = "g3_eV_nm6")]
    pub g3: f64,
    #[serde(rename = "g4_eV_nm9")]
    pub g4: f64,
    #[serde(rename = "w_eV_nm5")]
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefaultsFile {
    pub schema_version: u32,
    pub targets: Targets,
    pub coefficients: Coefficients,
    pub scattering_length_nm: f64,
    pub provenance: BTreeMap<String, String>,
}

impl DefaultsFile {
    pub fn params(&self, scattering_length_nm: f64) -> DftParams {
        let c = &self.coefficients;
        DftParams { g2: c.g2, g3: c.g3, g4: c.g4, w: c.w, scattering_length: scattering_length_nm, m_he: M_HE, m_e: M_E }
    }

    /// Calibrate afresh against the standard helium-4 targets, keeping the
    /// shipped provenance notes.
    pub fn recalibrated() -> Result<Self, RunError> {
        let t = SaturationTargets::helium4();
        let p = calibrate_params(&t).map_err(RunError::from)?;
        let shipped = Self::shipped();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            targets: Targets {
                density_nm3: t.density_nm3,
                chemical_potential_ev: t.chemical_potential_ev,
                sound_speed_m_s: t.sound_speed_m_s,
                surface_tension_ev_nm2: t.surface_tension_ev_nm2,
            },
            coefficients: Coefficients { g2: p.g2, g3: p.g3, g4: p.g4, w: p.w },
            scattering_length_nm: p.scattering_length,
            provenance: shipped.provenance,
        })
    }

    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED).expect("shipped params.defaults.json is valid")
    }

    /// The file named by `HELIOX_DEFAULTS`, else the shipped one.
    /// The file in effect and where it came from.
    pub fn load() -> Result<(Self, String), RunError> {
        match std::env::var_os(ENV_VAR) {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    RunError::Validation(format!("{ENV_VAR}={}: {e}", path.to_string_lossy()))
                })?;
                let file: Self = serde_json::from_str(&text).map_err(|e| {
                    RunError::Validation(format!("{ENV_VAR}={}: {e}", path.to_string_lossy()))
                })?;
                if file.schema_version != SCHEMA_VERSION {
                    return Err(RunError::Validation(format!(
                        "{ENV_VAR}: schema_version {} is not {SCHEMA_VERSION}",
                        file.schema_version
                    )));
                }
                Ok((file, path.to_string_lossy().into_owned()))
            }
            None => Ok((Self::shipped(), "shipped".into())),
        }
    }
}
