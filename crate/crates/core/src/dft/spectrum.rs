//! Electron levels in the frozen helium potential V(r) = f0·n(r), dipole
//! matrix elements and radiative rates.

use serde::{Deserialize, Serialize};

use super::bubble::{electron_hamiltonian, BubbleProfile};
use super::grid::RadialGrid;
use super::{DftError, LevelLabel};
use crate::units::{self, ElectronVolts, C_LIGHT, EPSILON0, HBAR};

/// A bound electron level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronLevel {
    pub label: LevelLabel,
    /// Eigenvalue measured from the bubble-interior potential zero, eV.
    pub energy: f64,
    /// u = r·φ samples, normalised as 4π∫u² dr = 1.
    pub u: Vec<f64>,
    pub grid: RadialGrid,
    /// ‖H u − E u‖ / ‖u‖ of the eigensolve, eV.
    pub residual: f64,
}

impl ElectronLevel {
    /// Interior sign changes of u.
    pub fn node_count(&self) -> usize {
        let peak = self.u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let sig: Vec<f64> = self.u.iter().copied().filter(|v| v.abs() > 1e-6 * peak).collect();
        sig.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

/// Outcome of a level request: bound levels carry data, unbound ones are
/// only flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LevelSlot {
    Bound(ElectronLevel),
    Unbound { label: LevelLabel, energy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub barrier: f64,
    pub slots: Vec<LevelSlot>,
}

impl Spectrum {
    pub fn bound(&self) -> impl Iterator<Item = &ElectronLevel> {
        self.slots.iter().filter_map(|s| match s {
            LevelSlot::Bound(l) => Some(l),
            LevelSlot::Unbound { .. } => None,
        })
    }

    pub fn get(&self, label: LevelLabel) -> Option<&ElectronLevel> {
        self.bound().find(|l| l.label == label)
    }
}

/// Bound levels with l ≤ `l_max` and n_r < `n_max` in the helium potential of
/// `profile`.
pub fn electron_spectrum(profile: &BubbleProfile, l_max: usize, n_max: usize) -> Spectrum {
    let potential: Vec<f64> = profile.density.iter().map(|n| profile.params.f0() * n).collect();
    spectrum_in_potential(&profile.grid, profile.params.kinetic_e(), &potential, profile.barrier, l_max, n_max)
}

/// Same as [`electron_spectrum`] for an arbitrary potential sampled on `grid`;
/// levels at or above `threshold` are reported unbound.
pub fn spectrum_in_potential(
    grid: &RadialGrid,
    kinetic: f64,
    potential: &[f64],
    threshold: f64,
    l_max: usize,
    n_max: usize,
) -> Spectrum {
    let norm = 1.0 / (4.0 * std::f64::consts::PI * grid.dr()).sqrt();
    let mut slots = Vec::new();
    for l in 0..=l_max {
        let h = electron_hamiltonian(grid, kinetic, potential, l);
        let mut found: Vec<Vec<f64>> = Vec::new();
        for n_r in 0..n_max {
            let label = LevelLabel { n_r, l };
            let (e, mut v) = h.eigenpair(n_r, None);
            if e >= threshold {
                slots.push(LevelSlot::Unbound { label, energy: e });
                continue;
            }
            // orthogonalise against lower levels of the same l
            for prev in &found {
                let ov: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= ov * p);
            }
            super::tridiag::normalize(&mut v);
            let hv = h.mul_vec(&v);
            let residual = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            found.push(v.clone());
            slots.push(LevelSlot::Bound(ElectronLevel {
                label,
                energy: e,
                u: v.iter().map(|x| x * norm).collect(),
                grid: *grid,
                residual,
            }));
        }
    }
    Spectrum { barrier: threshold, slots }
}

/// Dipole matrix element between two levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionDipole {
    pub from: LevelLabel,
    pub to: LevelLabel,
    /// e·nm
    pub d: f64,
    /// Photon wavelength for |ΔE|, µm (infinite for degenerate levels).
    pub wavelength_um: f64,
    /// E_to − E_from, eV.
    pub delta_e: f64,
}

/// ⟨l', 0| cos θ |l, 0⟩ for |l − l'| = 1, zero otherwise.
pub fn angular_factor(l_a: usize, l_b: usize) -> f64 {
    let (lo, hi) = if l_a < l_b { (l_a, l_b) } else { (l_b, l_a) };
    if hi != lo + 1 {
        return 0.0;
    }
    let l = lo as f64;
    (l + 1.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)).sqrt()
}

/// Signed ⟨b|z|a⟩ in nm for the m = 0 components. The sign follows the
/// eigenvector convention (u positive near the origin).
pub fn dipole_element(a: &ElectronLevel, b: &ElectronLevel) -> Result<f64, DftError> {
    if !a.grid.same_as(&b.grid) {
        return Err(DftError::GridMismatch);
    }
    let ang = angular_factor(a.label.l, b.label.l);
    if ang == 0.0 {
        return Ok(0.0);
    }
    let radial: f64 = a
        .u
        .iter()
        .zip(&b.u)
        .enumerate()
        .map(|(i, (x, y))| x * y * a.grid.r(i))
        .sum::<f64>()
        * 4.0
        * std::f64::consts::PI
        * a.grid.dr();
    Ok(ang * radial)
}

/// d = e·|⟨b|z|a⟩| for the m = 0 components.
pub fn transition_dipole(a: &ElectronLevel, b: &ElectronLevel) -> Result<TransitionDipole, DftError> {
    let d = dipole_element(a, b)?.abs();
    let delta_e = b.energy - a.energy;
    let wavelength_um = units::energy_to_wavelength(ElectronVolts(delta_e.abs()))
        .map(|l| l.0)
        .unwrap_or(f64::INFINITY);
    Ok(TransitionDipole { from: a.label, to: b.label, d, wavelength_um, delta_e })
}

/// Spontaneous emission rate γ = ω³d²/(3π ε0 hbar c³) in s⁻¹ for a dipole in
/// e·nm and a wavelength in µm.
pub fn spontaneous_rate(d_enm: f64, wavelength_um: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * C_LIGHT / (wavelength_um * 1e3);
    let per_fs = omega.powi(3) * d_enm * d_enm / (3.0 * std::f64::consts::PI * EPSILON0 * HBAR * C_LIGHT.powi(3));
    per_fs / units::PER_SECOND
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::HBAR2_2ME;

    fn well(r0: f64, grid: RadialGrid) -> Vec<f64> {
        grid.radii().iter().map(|&r| if r < r0 { 0.0 } else { 1e6 }).collect()
    }

    #[test]
    fn sharp_wall_ground_state() {
        let grid = RadialGrid::new(2.0, 4096).unwrap();
        let r0 = 1.14;
        let s = spectrum_in_potential(&grid, HBAR2_2ME, &well(r0, grid), 1e5, 1, 2);
        let e1s = s.get(LevelLabel::S1).unwrap().energy;
        let exact = std::f64::consts::PI.powi(2) * HBAR2_2ME / (r0 * r0);
        assert!((exact - 0.2893).abs() < 5e-4);
        assert!((e1s / exact - 1.0).abs() < 5e-3, "{e1s} vs {exact}");
        let e1p = s.get(LevelLabel::P1).unwrap().energy;
        let exact_p = 4.493_409_457_9f64.powi(2) * HBAR2_2ME / (r0 * r0);
        assert!((e1p / exact_p - 1.0).abs() < 5e-3);
    }

    #[test]
    fn sharp_wall_dipole_matches_bessel_quadrature() {
        // independent route: closed-form spherical Bessel functions on a fine
        // quadrature grid
        let r0 = 1.0;
        let grid = RadialGrid::new(1.5, 6000).unwrap();
        let s = spectrum_in_potential(&grid, HBAR2_2ME, &well(r0, grid), 1e5, 1, 1);
        let d = transition_dipole(s.get(LevelLabel::S1).unwrap(), s.get(LevelLabel::P1).unwrap()).unwrap();
        let k0 = std::f64::consts::PI;
        let k1 = 4.493_409_457_909_064;
        let j0 = |x: f64| x.sin() / x;
        let j1 = |x: f64| x.sin() / (x * x) - x.cos() / x;
        let m = 200_000;
        let h = r0 / m as f64;
        let (mut n0, mut n1, mut cross) = (0.0, 0.0, 0.0);
        for i in 0..m {
            let r = (i as f64 + 0.5) * h;
            let a = j0(k0 * r);
            let b = j1(k1 * r);
            n0 += a * a * r * r * h;
            n1 += b * b * r * r * h;
            cross += a * b * r * r * r * h;
        }
        let oracle = cross / (n0 * n1).sqrt() / 3f64.sqrt();
        assert!((d.d / oracle - 1.0).abs() < 2e-3, "{} vs {oracle}", d.d);
    }

    #[test]
    fn selection_rule_and_symmetry() {
        let grid = RadialGrid::new(3.0, 1024).unwrap();
        let s = spectrum_in_potential(&grid, HBAR2_2ME, &well(1.2, grid), 1e5, 2, 2);
        let s1 = s.get(LevelLabel::S1).unwrap();
        let s2 = s.get(LevelLabel::S2).unwrap();
        let p1 = s.get(LevelLabel::P1).unwrap();
        let d1d = s.get(LevelLabel::new(0, 2)).unwrap();
        assert_eq!(transition_dipole(s1, s2).unwrap().d, 0.0);
        assert_eq!(transition_dipole(s1, d1d).unwrap().d, 0.0);
        let ab = transition_dipole(s1, p1).unwrap();
        let ba = transition_dipole(p1, s1).unwrap();
        assert_eq!(ab.d, ba.d);
        assert!(ab.d > 0.0);
        assert_eq!(s2.node_count(), 1);
        assert_eq!(s1.node_count(), 0);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g1 = RadialGrid::new(3.0, 512).unwrap();
        let g2 = RadialGrid::new(3.0, 1024).unwrap();
        let a = spectrum_in_potential(&g1, HBAR2_2ME, &well(1.0, g1), 1e5, 0, 1);
        let b = spectrum_in_potential(&g2, HBAR2_2ME, &well(1.0, g2), 1e5, 1, 1);
        let r = transition_dipole(a.get(LevelLabel::S1).unwrap(), b.get(LevelLabel::P1).unwrap());
        assert_eq!(r.unwrap_err(), DftError::GridMismatch);
    }

    #[test]
    fn unbound_levels_flagged() {
        let grid = RadialGrid::new(6.0, 1024).unwrap();
        let pot: Vec<f64> = grid.radii().iter().map(|&r| if r < 1.0 { 0.0 } else { 0.5 }).collect();
        let s = spectrum_in_potential(&grid, HBAR2_2ME, &pot, 0.5, 0, 4);
        assert!(s.slots.iter().any(|x| matches!(x, LevelSlot::Unbound { .. })));
        assert!(s.bound().all(|l| l.energy < 0.5));
    }

    #[test]
    fn radiative_rates() {
        let g = spontaneous_rate(0.544, 9.9);
        assert!((g / 2.2e5 - 1.0).abs() < 0.03, "{g}");
        let g = spontaneous_rate(0.31, 5.13);
        assert!((g / 5.20e5 - 1.0).abs() < 0.03, "{g}");
        assert_eq!(spontaneous_rate(0.0, 5.0), 0.0);
        let base = spontaneous_rate(0.3, 6.0);
        assert!((spontaneous_rate(0.6, 6.0) / base - 4.0).abs() < 1e-12);
        assert!((spontaneous_rate(0.3, 12.0) / base - 0.125).abs() < 1e-12);
    }
}
