use serde::{Deserialize, Serialize};

use super::{LevelTable, Scenario, ScenarioError};
use crate::lindblad::{DensityMatrix, DriveEnvelope, DriveTerm, Observable, PropagationSpec};

/// Gaussian pulse settings. Unset fields are filled by the builders: the
/// carrier from the target transition, the centre at 3W, the window end at
/// twice the centre and the step at a 200th of the carrier period or
/// 1/(40·level spread), whichever is smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub width_fs: f64,
    pub field_v_per_nm: f64,
    pub carrier: Option<f64>,
    pub center_fs: Option<f64>,
    pub t_end_fs: Option<f64>,
    pub dt_fs: Option<f64>,
    pub stride: usize,
}

impl PulseParams {
    pub fn new(width_fs: f64, field_v_per_nm: f64) -> Self {
        Self { width_fs, field_v_per_nm, carrier: None, center_fs: None, t_end_fs: None, dt_fs: None, stride: 20 }
    }
}

fn assemble(levels: &LevelTable, pulse: &PulseParams, carrier: f64) -> Result<Scenario, ScenarioError> {
    if !(pulse.width_fs > 0.0) || !pulse.field_v_per_nm.is_finite() {
        return Err(ScenarioError::Invalid("pulse needs a positive width and a finite field".into()));
    }
    if !(carrier > 0.0 && carrier.is_finite()) {
        return Err(ScenarioError::Invalid(format!("carrier must be positive, got {carrier}")));
    }
    let center = pulse.center_fs.unwrap_or(3.0 * pulse.width_fs);
    let t_end = pulse.t_end_fs.unwrap_or(2.0 * center);
    let drive = DriveEnvelope::gaussian(pulse.field_v_per_nm, carrier, pulse.width_fs, center)?;
    let h0 = levels.h0();
    let dt = pulse.dt_fs.unwrap_or_else(|| {
        let spread = levels.omega.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - levels.omega.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        (drive.period() / 200.0).min(1.0 / (40.0 * spread))
    });
    let guard = drive.period() / 40.0;
    if dt > guard {
        return Err(ScenarioError::Invalid(format!(
            "time step {dt} fs is coarser than the carrier guard {guard} fs"
        )));
    }
    let ground = levels.require("1S")?;
    let rho0 = DensityMatrix::basis(levels.space(), ground)?;
    let mut spec = PropagationSpec::new(0.0, t_end, dt, pulse.stride.max(1));
    for (k, label) in levels.labels.iter().enumerate() {
        spec = spec.observe(Observable::expectation(format!("pop_{label}"), levels.projector(k)));
    }
    let drives = vec![DriveTerm { coupling: levels.h1(), drive }];
    Ok(Scenario { rho0, h_static: h0, drives, dissipators: Vec::new(), spec })
}

/// H = H0 + E(t)·H1 without rotating-wave approximation or dissipation,
/// starting in 1S. Records every level population and
/// `leakage` = 1 − P(1S) − P(1P).
pub fn build_driven_bubble(levels: &LevelTable, pulse: &PulseParams) -> Result<Scenario, ScenarioError> {
    let s = levels.require("1S")?;
    let p = levels.require("1P")?;
    let carrier = pulse.carrier.unwrap_or(levels.omega[p] - levels.omega[s]);
    let mut scenario = assemble(levels, pulse, carrier)?;
    let proj_s = levels.projector(s);
    let proj_p = levels.projector(p);
    scenario.spec = scenario.spec.observe(Observable::custom("leakage", move |rho| {
        1.0 - rho.expectation(&proj_s).unwrap_or(0.0) - rho.expectation(&proj_p).unwrap_or(0.0)
    }));
    Ok(scenario)
}

/// Same Hamiltonian driven at half the 1S→2S frequency.
pub fn build_two_photon(levels: &LevelTable, pulse: &PulseParams) -> Result<Scenario, ScenarioError> {
    let s = levels.require("1S")?;
    let s2 = levels.require("2S")?;
    let p = levels
        .index("1P")
        .ok_or_else(|| ScenarioError::Invalid("two-photon excitation needs the intermediate 1P level".into()))?;
    if levels.dipole[s][p] == 0.0 || levels.dipole[p][s2] == 0.0 {
        return Err(ScenarioError::Invalid("1S-1P and 1P-2S dipoles must be nonzero".into()));
    }
    if levels.dipole[s][s2] != 0.0 {
        return Err(ScenarioError::Invalid("1S-2S dipole must vanish".into()));
    }
    let carrier = pulse.carrier.unwrap_or(0.5 * (levels.omega[s2] - levels.omega[s]));
    assemble(levels, pulse, carrier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HBAR;

    /// 1S, 1P, 2S with the 25 bar numbers rounded.
    fn table(d_sp: f64) -> LevelTable {
        LevelTable::new(
            vec!["1S".into(), "1P".into(), "2S".into()],
            vec![0.220 / HBAR, 0.444 / HBAR, 0.829 / HBAR],
            vec![vec![0.0, d_sp, 0.0], vec![d_sp, 0.0, -0.25], vec![0.0, -0.25, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn weak_pulse_matches_first_order_perturbation() {
        // P(1P) ≈ |(d ℰ/2ħ) ∫G e^{iΔt}|² on resonance: (dℰ/2ħ · 1.5054 W)²
        let t = table(0.4);
        let field = 1e-4;
        let pulse = PulseParams::new(100.0, field);
        let ts = build_driven_bubble(&t, &pulse).unwrap().run().unwrap();
        let area = 0.4 * field / HBAR * 100.0 * (std::f64::consts::PI / (2.0 * std::f64::consts::LN_2)).sqrt();
        let expect = (0.5 * area).powi(2);
        let got = ts.last("pop_1P").unwrap();
        assert!((got / expect - 1.0).abs() < 0.02, "{got} vs {expect}");
        let leak = ts.last("leakage").unwrap();
        assert!(leak.abs() < 1e-6);
    }

    #[test]
    fn zero_field_leaves_ground_state() {
        let t = table(0.4);
        let ts = build_two_photon(&t, &PulseParams::new(200.0, 0.0)).unwrap().run().unwrap();
        assert_eq!(ts.last("pop_2S").unwrap(), 0.0);
        assert_eq!(ts.last("pop_1S").unwrap(), 1.0);
    }

    #[test]
    fn refusals() {
        let t = table(0.4);
        let mut coarse = PulseParams::new(100.0, 0.1);
        coarse.dt_fs = Some(5.0);
        assert!(build_driven_bubble(&t, &coarse).is_err());
        let no_p = t.restrict(&["1S", "2S"]).unwrap();
        assert!(build_two_photon(&no_p, &PulseParams::new(200.0, 0.05)).is_err());
        assert!(build_driven_bubble(&no_p, &PulseParams::new(200.0, 0.05)).is_err());
    }
}
