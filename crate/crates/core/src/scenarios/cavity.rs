use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Frame, Scenario, ScenarioError};
use crate::lindblad::{
    annihilation, concurrence, embed, partial_trace, step_limit, CMatrix, DensityMatrix, Dissipator, HilbertSpace,
    Observable, Operator, PropagationSpec,
};

/// Single cavity mode. Frequencies are rad/fs, κ is 1/fs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c: f64,
    pub g: f64,
    pub kappa: f64,
    pub photon_dim: usize,
}

impl CavityParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        if self.photon_dim < 2 {
            return Err(ScenarioError::Invalid(format!("photon truncation must be >= 2, got {}", self.photon_dim)));
        }
        if !(self.g >= 0.0 && self.kappa >= 0.0 && self.omega_c >= 0.0) {
            return Err(ScenarioError::Invalid("cavity frequency, coupling and loss must be non-negative".into()));
        }
        Ok(())
    }
}

/// Which bubble holds the excitation at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialExcitation {
    #[default]
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBubbleParams {
    /// 1S→1P angular frequency of both bubbles, rad/fs.
    pub omega_eg: f64,
    pub g_alpha: f64,
    pub g_beta: f64,
    pub gamma_r: f64,
    pub gamma_nr: f64,
    pub cavity: CavityParams,
    pub initial: InitialExcitation,
    /// Project on coupling-weighted bright/dark states instead of the fixed
    /// symmetric/antisymmetric pair.
    pub weighted_projections: bool,
}

/// Integration window shared by the cavity builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityRun {
    pub frame: Frame,
    pub t_end_fs: f64,
    /// Defaults to the engine's step guard.
    pub dt_fs: Option<f64>,
    /// Approximate number of output points.
    pub samples: usize,
}

impl CavityRun {
    pub fn new(frame: Frame, t_end_fs: f64) -> Self {
        Self { frame, t_end_fs, dt_fs: None, samples: 2000 }
    }
}

/// Output every t_end/samples; the step is the largest one below both the
/// engine guard and a twentieth of the inverse total loss rate that divides
/// the output interval, so runs with different models share output times.
fn spec_for(h: &Operator, dissipators: &[Dissipator], run: &CavityRun) -> Result<PropagationSpec, ScenarioError> {
    if !(run.t_end_fs > 0.0) {
        return Err(ScenarioError::Invalid("run length must be positive".into()));
    }
    let total_rate: f64 = dissipators.iter().map(|d| d.rate).sum();
    let loss_limit = if total_rate > 0.0 { 0.05 / total_rate } else { f64::INFINITY };
    let dt_max = run.dt_fs.unwrap_or(step_limit(h, &[]).min(loss_limit));
    let samples = run.samples.max(1);
    let interval = run.t_end_fs / samples as f64;
    let per_sample = (interval / dt_max - 1e-9).ceil().max(1.0) as usize;
    Ok(PropagationSpec::new(0.0, run.t_end_fs, interval / per_sample as f64, per_sample))
}

fn lowering() -> Operator {
    Operator::transition(2, 0, 1).expect("two-level")
}

fn excited() -> Operator {
    Operator::transition(2, 1, 1).expect("two-level")
}

/// Light-matter coupling g(σ + σ†)(a + a†) in the lab frame or
/// g(σ†a + σa†) in the rotating frame, for the emitter on factor `k`.
fn coupling(space: &HilbertSpace, k: usize, cav: usize, g: f64, frame: Frame) -> Result<Operator, ScenarioError> {
    let sm = embed(&lowering(), k, space)?;
    let a = embed(&annihilation(space.dims()[cav])?, cav, space)?;
    let op = match frame {
        Frame::Lab => sm.add(&sm.dagger())?.mul(&a.add(&a.dagger())?)?,
        Frame::Rotating => sm.dagger().mul(&a)?.add(&sm.mul(&a.dagger())?)?,
    };
    Ok(op.scale(g))
}

/// Bubble (1S, 1P) in a cavity, starting from |1S⟩⊗|1⟩. Loss channels are
/// κ·D[a] and γ_r·D[|1S⟩⟨1P|]. Records `pop_photon_in_cavity` (⟨a†a⟩),
/// `pop_photon_in_bubble` (P(1P)) and `excitations`.
pub fn build_jc_cavity(
    cavity: &CavityParams,
    omega_eg: f64,
    gamma_r: f64,
    run: &CavityRun,
) -> Result<Scenario, ScenarioError> {
    cavity.validate()?;
    let space = HilbertSpace::new(vec![2, cavity.photon_dim])?;
    let a = embed(&annihilation(cavity.photon_dim)?, 1, &space)?;
    let n_ph = a.dagger().mul(&a)?;
    let p_e = embed(&excited(), 0, &space)?;
    let bare = match run.frame {
        Frame::Lab => p_e.scale(omega_eg).add(&n_ph.scale(cavity.omega_c))?,
        Frame::Rotating => p_e.scale(omega_eg - cavity.omega_c),
    };
    let h = bare.add(&coupling(&space, 0, 1, cavity.g, run.frame)?)?;
    let dissipators = vec![
        Dissipator::new(a, cavity.kappa)?,
        Dissipator::new(embed(&lowering(), 0, &space)?, gamma_r)?,
    ];
    let spec = spec_for(&h, &dissipators, run)?
        .observe(Observable::expectation("pop_photon_in_cavity", n_ph.clone()))
        .observe(Observable::expectation("pop_photon_in_bubble", p_e.clone()))
        .observe(Observable::expectation("excitations", n_ph.add(&p_e)?));
    let rho0 = DensityMatrix::product_basis(space, &[0, 1])?;
    Ok(Scenario { rho0, h_static: h, drives: Vec::new(), dissipators, spec })
}

/// Amplitudes of the fixed (or coupling-weighted) bright and dark states on
/// (|1P⟩_α|1S⟩_β, |1S⟩_α|1P⟩_β).
fn bright_dark(p: &TwoBubbleParams) -> ([f64; 2], [f64; 2]) {
    let norm = (p.g_alpha * p.g_alpha + p.g_beta * p.g_beta).sqrt();
    if p.weighted_projections && norm > 0.0 {
        ([p.g_alpha / norm, p.g_beta / norm], [p.g_beta / norm, -p.g_alpha / norm])
    } else {
        let s = 0.5f64.sqrt();
        // |AE⟩ = (|1S⟩_α|1P⟩_β − |1P⟩_α|1S⟩_β)/√2
        ([s, s], [-s, s])
    }
}

/// Two bubbles sharing one cavity mode on the space [α, β, photon]. Records
/// `pop_SE`, `pop_AE`, `pop_ground` (both bubbles in 1S, any photon number),
/// `photon_number` and the electron-pair `concurrence`.
pub fn build_two_bubble(p: &TwoBubbleParams, run: &CavityRun) -> Result<Scenario, ScenarioError> {
    p.cavity.validate()?;
    for (name, v) in [("g_alpha", p.g_alpha), ("g_beta", p.g_beta), ("gamma_r", p.gamma_r), ("gamma_nr", p.gamma_nr)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ScenarioError::Invalid(format!("{name} must be non-negative, got {v}")));
        }
    }
    let dim = p.cavity.photon_dim;
    let space = HilbertSpace::new(vec![2, 2, dim])?;
    let a = embed(&annihilation(dim)?, 2, &space)?;
    let n_ph = a.dagger().mul(&a)?;
    let pe_a = embed(&excited(), 0, &space)?;
    let pe_b = embed(&excited(), 1, &space)?;
    let bare = match run.frame {
        Frame::Lab => pe_a.add(&pe_b)?.scale(p.omega_eg).add(&n_ph.scale(p.cavity.omega_c))?,
        Frame::Rotating => pe_a.add(&pe_b)?.scale(p.omega_eg - p.cavity.omega_c),
    };
    let h = bare
        .add(&coupling(&space, 0, 2, p.g_alpha, run.frame)?)?
        .add(&coupling(&space, 1, 2, p.g_beta, run.frame)?)?;

    let mut dissipators = vec![Dissipator::new(a, p.cavity.kappa)?];
    for k in 0..2 {
        let sm = embed(&lowering(), k, &space)?;
        dissipators.push(Dissipator::new(sm.clone(), p.gamma_r)?);
        dissipators.push(Dissipator::new(sm, p.gamma_nr)?);
    }

    let (bright, dark) = bright_dark(p);
    let i_eg = space.index(&[1, 0, 0]);
    let i_ge = space.index(&[0, 1, 0]);
    let projector = |amp: [f64; 2]| -> Result<Operator, ScenarioError> {
        let d = space.dim();
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[i_eg] = amp[0].into();
        v[i_ge] = amp[1].into();
        let m = CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
        Ok(Operator::new(space.clone(), m)?)
    };
    let ground = {
        let d = space.dim();
        let m = CMatrix::from_fn(d, d, |i, j| {
            let dg = space.digits(i);
            if i == j && dg[0] == 0 && dg[1] == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Operator::new(space.clone(), m)?
    };

    let spec = spec_for(&h, &dissipators, run)?
        .observe(Observable::expectation("pop_SE", projector(bright)?))
        .observe(Observable::expectation("pop_AE", projector(dark)?))
        .observe(Observable::expectation("pop_ground", ground))
        .observe(Observable::expectation("photon_number", n_ph))
        .observe(Observable::custom("concurrence", |rho| {
            partial_trace(rho, &[0, 1]).and_then(|r| concurrence(&r)).unwrap_or(f64::NAN)
        }));
    let digits = match p.initial {
        InitialExcitation::Alpha => [1, 0, 0],
        InitialExcitation::Beta => [0, 1, 0],
    };
    let rho0 = DensityMatrix::product_basis(space, &digits)?;
    Ok(Scenario { rho0, h_static: h, drives: Vec::new(), dissipators, spec })
}

/// (e^{iθ1}|1S⟩ + e^{iθ2}|1P⟩)/√2 on a single bubble.
pub fn superposition_1s1p(theta1: f64, theta2: f64) -> DensityMatrix {
    let s = 0.5f64.sqrt();
    let psi = [Complex64::from_polar(s, theta1), Complex64::from_polar(s, theta2)];
    DensityMatrix::pure(HilbertSpace::single(2).expect("two-level"), &psi).expect("normalised")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{angular_from_ghz, prolate, rate_from_ghz};
    use crate::units::HBAR;

    fn w_eg() -> f64 {
        prolate::TRANSITION_EV / HBAR
    }

    fn cavity(kappa_ghz: f64, dim: usize) -> CavityParams {
        CavityParams { omega_c: w_eg(), g: angular_from_ghz(prolate::COUPLING_GHZ), kappa: rate_from_ghz(kappa_ghz), photon_dim: dim }
    }

    fn two(g_alpha: f64, g_beta: f64, kappa_ghz: f64, initial: InitialExcitation) -> TwoBubbleParams {
        let g = angular_from_ghz(prolate::COUPLING_GHZ);
        TwoBubbleParams {
            omega_eg: w_eg(),
            g_alpha: g_alpha * g,
            g_beta: g_beta * g,
            gamma_r: prolate::GAMMA_R_PER_S * 1e-15,
            gamma_nr: rate_from_ghz(prolate::GAMMA_NR_GHZ),
            cavity: cavity(kappa_ghz, 2),
            initial,
            weighted_projections: false,
        }
    }

    #[test]
    fn truncation_guard() {
        let mut c = cavity(0.02, 2);
        c.photon_dim = 1;
        assert!(build_jc_cavity(&c, w_eg(), 0.0, &CavityRun::new(Frame::Rotating, 1e3)).is_err());
    }

    #[test]
    fn decoupled_cavity_only_decays() {
        let mut c = cavity(10.0, 2);
        c.g = 0.0;
        let ts = build_jc_cavity(&c, w_eg(), 0.0, &CavityRun::new(Frame::Rotating, 2e5)).unwrap().run().unwrap();
        let kappa = c.kappa;
        for (t, n) in ts.times.iter().zip(ts.get("pop_photon_in_cavity").unwrap()) {
            assert!((n - (-kappa * t).exp()).abs() < 1e-7);
        }
        assert!(ts.get("pop_photon_in_bubble").unwrap().iter().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn rotating_vacuum_rabi_period() {
        let c = CavityParams { kappa: 0.0, ..cavity(0.0, 2) };
        let ts = build_jc_cavity(&c, w_eg(), 0.0, &CavityRun::new(Frame::Rotating, 3e5)).unwrap().run().unwrap();
        let g = c.g;
        for (t, n) in ts.times.iter().zip(ts.get("pop_photon_in_cavity").unwrap()) {
            assert!((n - (g * t).cos().powi(2)).abs() < 1e-6);
        }
    }

    #[test]
    fn third_photon_level_barely_matters() {
        let run = CavityRun::new(Frame::Rotating, 5e5);
        let p2 = two(0.5, 1.0, 10.0, InitialExcitation::Alpha);
        let mut p3 = p2;
        p3.cavity.photon_dim = 3;
        let a = build_two_bubble(&p2, &run).unwrap().run().unwrap();
        let b = build_two_bubble(&p3, &run).unwrap().run().unwrap();
        for name in ["pop_SE", "pop_AE", "pop_ground"] {
            for (x, y) in a.get(name).unwrap().iter().zip(b.get(name).unwrap()) {
                assert!((x - y).abs() < 1e-3, "{name}");
            }
        }
    }

    #[test]
    fn swapping_bubbles_is_a_symmetry() {
        let run = CavityRun::new(Frame::Rotating, 3e5);
        let a = build_two_bubble(&two(0.5, 1.0, 0.02, InitialExcitation::Alpha), &run).unwrap().run().unwrap();
        let b = build_two_bubble(&two(1.0, 0.5, 0.02, InitialExcitation::Beta), &run).unwrap().run().unwrap();
        for name in ["pop_SE", "pop_AE", "concurrence"] {
            for (x, y) in a.get(name).unwrap().iter().zip(b.get(name).unwrap()) {
                assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn populations_close_and_start_unentangled() {
        let run = CavityRun::new(Frame::Rotating, 3e5);
        let ts = build_two_bubble(&two(1.0, 1.0, 10.0, InitialExcitation::Alpha), &run).unwrap().run().unwrap();
        assert_eq!(ts.get("concurrence").unwrap()[0], 0.0);
        let (se, ae, gr) = (ts.get("pop_SE").unwrap(), ts.get("pop_AE").unwrap(), ts.get("pop_ground").unwrap());
        for k in 0..ts.len() {
            assert!((se[k] + ae[k] + gr[k] - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn weighted_projection_tracks_the_dark_state() {
        let run = CavityRun::new(Frame::Rotating, 3e5);
        let mut p = two(0.5, 1.0, 0.02, InitialExcitation::Alpha);
        p.weighted_projections = true;
        let ts = build_two_bubble(&p, &run).unwrap().run().unwrap();
        // |1P⟩_α|1S⟩_β has weight g_β²/(g_α²+g_β²) = 0.8 on the decoupled state
        let ae = ts.get("pop_AE").unwrap();
        for (t, v) in ts.times.iter().zip(ae) {
            let expect = 0.8 * (-(p.gamma_nr + p.gamma_r) * t).exp();
            assert!((v - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn superposition_phases() {
        let rho = superposition_1s1p(0.0, std::f64::consts::FRAC_PI_2);
        assert!((rho.population(0) - 0.5).abs() < 1e-15);
        assert!((rho.matrix()[(1, 0)] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }
}
