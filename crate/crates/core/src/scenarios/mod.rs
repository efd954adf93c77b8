//! Model builders on top of the master-equation engine: the laser-driven
//! bubble, two-photon excitation, a bubble in a cavity and two bubbles
//! sharing one cavity photon, plus closed-form analytics.

mod analytics;
mod cavity;
mod driven;
mod levels;

use thiserror::Error;

use crate::dft::DftError;
use crate::lindblad::{
    propagate, DensityMatrix, Dissipator, DriveTerm, LindbladError, Operator, PropagationSpec, TimeSeries,
};

pub use analytics::{
    cooperativity, coupling_from_field, dressed_states, oscillation_peaks, quality_factor, DressedStateResult,
    QualityFactor,
};
pub use cavity::{
    build_jc_cavity, build_two_bubble, superposition_1s1p, CavityParams, CavityRun, InitialExcitation,
    TwoBubbleParams,
};
pub use driven::{build_driven_bubble, build_two_photon, PulseParams};
pub use levels::{default_level_table, LevelTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Engine(#[from] LindbladError),
    #[error(transparent)]
    Dft(#[from] DftError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Frame in which a cavity model is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Full Hamiltonian with counter-rotating terms.
    #[default]
    Lab,
    /// Interaction picture at the cavity frequency, rotating-wave terms only.
    Rotating,
}

/// Everything [`propagate`] needs, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub rho0: DensityMatrix,
    pub h_static: Operator,
    pub drives: Vec<DriveTerm>,
    pub dissipators: Vec<Dissipator>,
    pub spec: PropagationSpec,
}

impl Scenario {
    pub fn run(&self) -> Result<TimeSeries, LindbladError> {
        propagate(&self.rho0, &self.h_static, &self.drives, &self.dissipators, &self.spec)
    }
}

/// Inputs for the prolate bubble in the slot-waveguide cavity. The prolate
/// shape is outside the spherical solver, so these are fixed inputs.
pub mod prolate {
    /// 1S→1P transition energy, eV.
    pub const TRANSITION_EV: f64 = 0.125;
    /// 1S↔1P dipole, e·nm.
    pub const DIPOLE_ENM: f64 = 0.544;
    /// Bubble-cavity coupling g/2π, GHz.
    pub const COUPLING_GHZ: f64 = 3.81;
    /// Radiative rate, 1/s.
    pub const GAMMA_R_PER_S: f64 = 0.22e6;
    /// Non-radiative rate in solid helium, GHz.
    pub const GAMMA_NR_GHZ: f64 = 0.1;
    /// Cavity photon loss rate, GHz.
    pub const KAPPA_GHZ: f64 = 0.02;
}

/// g/2π in GHz to an angular frequency in rad/fs.
pub fn angular_from_ghz(ghz: f64) -> f64 {
    2.0 * std::f64::consts::PI * ghz * crate::units::GHZ
}

/// A rate in GHz (10⁹ s⁻¹) to 1/fs.
pub fn rate_from_ghz(ghz: f64) -> f64 {
    ghz * crate::units::GHZ
}
