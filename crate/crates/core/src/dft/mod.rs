//! Orbital-free density functional for an electron bubble in helium-4.

pub mod bubble;
pub mod dynamics;
pub mod grid;
pub mod params;
pub mod spectrum;
pub mod tridiag;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bubble::{relax_bubble, relax_ground_bubble, relax_profile, BubbleProfile, RelaxOptions};
pub use dynamics::{evolve_radial_realtime, AbsorbingLayer, RealtimeOptions, RealtimeRun};
pub use grid::RadialGrid;
pub use spectrum::{
    dipole_element, electron_spectrum, spontaneous_rate, transition_dipole, ElectronLevel, LevelSlot, Spectrum,
    TransitionDipole,
};
pub use params::{
    barrier_height, calibrate_params, solve_bulk_eos, BulkState, DftParams, SaturationTargets,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DftError {
    #[error("calibration failed: {reason} (residuals {residuals:?})")]
    Calibration { reason: String, residuals: Vec<f64> },
    #[error("pressure {pressure_bar} bar is below the spinodal pressure {spinodal_bar} bar")]
    BelowSpinodal { pressure_bar: f64, spinodal_bar: f64 },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("relaxation did not converge after {iterations} iterations")]
    NotConverged { iterations: usize, residual_history: Vec<f64> },
    #[error("levels live on different grids")]
    GridMismatch,
    #[error("level {level} is not bound")]
    Unbound { level: LevelLabel },
    #[error("real-time evolution diverged at t = {time_ps} ps; reduce the time step")]
    Diverged { time_ps: f64 },
    #[error("level {level} became unbound at t = {time_ps} ps (energy {energy} eV)")]
    UnboundDuringEvolution { level: LevelLabel, time_ps: f64, energy: f64, snapshot: Box<BubbleProfile> },
}

/// Electron level (radial node count, angular momentum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelLabel {
    pub n_r: usize,
    pub l: usize,
}

impl LevelLabel {
    pub const S1: LevelLabel = LevelLabel { n_r: 0, l: 0 };
    pub const P1: LevelLabel = LevelLabel { n_r: 0, l: 1 };
    pub const S2: LevelLabel = LevelLabel { n_r: 1, l: 0 };

    pub fn new(n_r: usize, l: usize) -> Self {
        Self { n_r, l }
    }
}

impl std::fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        const L: &[u8] = b"SPDFGHIK";
        let letter = L.get(self.l).map(|c| *c as char).unwrap_or('?');
        write!(f, "{}{}", self.n_r + 1, letter)
    }
}
