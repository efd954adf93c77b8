//! Physical constants and the internal unit system.
//!
//! Everything inside the crate works in (eV, nm, fs). Angular frequencies are
//! rad/fs and rates are 1/fs. Values are CODATA-2018 unless noted.
//!
//! | quantity            | value                     | unit       |
//! |---------------------|---------------------------|------------|
//! | hbar                | 0.6582119569              | eV·fs      |
//! | hbar·c              | 197.3269804               | eV·nm      |
//! | c                   | 299.792458                | nm/fs      |
//! | m_e c²              | 510998.95                 | eV         |
//! | m(⁴He) / m_e        | 7296.2995                 | 1          |
//! | e²/(4π ε0)          | 1.439964547               | eV·nm      |
//! | k_B                 | 8.617333262e-5            | eV/K       |
//! | 1 bar               | 6.241509074e-4            | eV/nm³     |

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduced Planck constant, eV·fs.
pub const HBAR: f64 = 0.658_211_956_9;
/// Speed of light, nm/fs.
pub const C_LIGHT: f64 = 299.792_458;
/// hbar·c in eV·nm.
pub const HBAR_C: f64 = HBAR * C_LIGHT;
/// Electron rest energy, eV.
pub const ELECTRON_REST_ENERGY: f64 = 510_998.95;
/// Electron mass in eV·fs²/nm².
pub const M_E: f64 = ELECTRON_REST_ENERGY / (C_LIGHT * C_LIGHT);
/// ⁴He atomic mass over electron mass (4.002602 u × 1822.888486 m_e/u).
pub const HE_TO_ELECTRON_MASS: f64 = 4.002_603_254 * 1822.888_486_209;
/// Helium-4 atom mass in eV·fs²/nm².
pub const M_HE: f64 = HE_TO_ELECTRON_MASS * M_E;
/// hbar²/(2 m_e) in eV·nm².
pub const HBAR2_2ME: f64 = HBAR * HBAR / (2.0 * M_E);
/// Coulomb constant e²/(4π ε0) in eV·nm.
pub const COULOMB: f64 = 1.439_964_547;
/// Vacuum permittivity in e²/(eV·nm).
pub const EPSILON0: f64 = 1.0 / (4.0 * std::f64::consts::PI * COULOMB);
/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617_333_262e-5;
/// Elementary charge in coulomb (SI).
pub const ELEMENTARY_CHARGE_SI: f64 = 1.602_176_634e-19;

/// One bar expressed in eV/nm³.
pub const BAR: f64 = 1.0e5 / ELEMENTARY_CHARGE_SI * 1.0e-27;
/// One erg/cm² expressed in eV/nm².
pub const ERG_PER_CM2: f64 = 1.0e-3 / ELEMENTARY_CHARGE_SI * 1.0e-18;
/// One kelvin per Å² expressed in eV/nm².
pub const KELVIN_PER_A2: f64 = K_B * 100.0;
/// 1 m/s in nm/fs.
pub const METER_PER_SECOND: f64 = 1.0e-6;
/// 1 s⁻¹ in fs⁻¹.
pub const PER_SECOND: f64 = 1.0e-15;
/// 1 GHz (as a rate or an angular frequency scale) in fs⁻¹.
pub const GHZ: f64 = 1.0e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("{quantity} must be positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
}

fn positive(quantity: &'static str, value: f64) -> Result<f64, UnitError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(UnitError::NonPositive { quantity, value })
    }
}

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub const UNIT: &'static str = $unit;

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }
    };
}

quantity!(
    /// Energy in eV.
    ElectronVolts,
    "eV"
);
quantity!(
    /// Wavelength in µm.
    Micrometers,
    "µm"
);
quantity!(
    /// Rate in s⁻¹.
    PerSecond,
    "1/s"
);
quantity!(
    /// Time in s.
    Seconds,
    "s"
);
quantity!(
    /// Pressure in bar.
    Bar,
    "bar"
);

impl ElectronVolts {
    /// Angular frequency E/hbar in rad/fs.
    pub fn angular_frequency(self) -> f64 {
        self.0 / HBAR
    }

    pub fn from_angular_frequency(omega: f64) -> Self {
        Self(omega * HBAR)
    }
}

impl PerSecond {
    /// The same rate in 1/fs.
    pub fn per_fs(self) -> f64 {
        self.0 * PER_SECOND
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Self(ghz * 1.0e9)
    }
}

impl Bar {
    /// Pressure in eV/nm³.
    pub fn internal(self) -> f64 {
        self.0 * BAR
    }
}

/// Photon wavelength for a transition energy, λ = 2π·hbar·c/E.
pub fn energy_to_wavelength(energy: ElectronVolts) -> Result<Micrometers, UnitError> {
    let e = positive("energy", energy.0)?;
    Ok(Micrometers(2.0 * std::f64::consts::PI * HBAR_C / e * 1.0e-3))
}

/// Inverse of [`energy_to_wavelength`].
pub fn wavelength_to_energy(lambda: Micrometers) -> Result<ElectronVolts, UnitError> {
    let l = positive("wavelength", lambda.0)?;
    Ok(ElectronVolts(2.0 * std::f64::consts::PI * HBAR_C / (l * 1.0e3)))
}

/// Lifetime τ = 1/γ.
pub fn rate_to_lifetime(rate: PerSecond) -> Result<Seconds, UnitError> {
    let g = positive("rate", rate.0)?;
    Ok(Seconds(1.0 / g))
}
