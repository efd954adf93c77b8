use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::units::HBAR;

/// Dressed states of the single-excitation block spanned by
/// {|1P,0⟩, |1S,1⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedStateResult {
    /// Generalised vacuum Rabi frequency √(Δ² + 4g²), rad/fs.
    pub omega_rabi: f64,
    /// Upper and lower dressed energies, eV.
    pub e_plus: f64,
    pub e_minus: f64,
    /// Amplitudes on (|1P,0⟩, |1S,1⟩).
    pub plus: [f64; 2],
    pub minus: [f64; 2],
}

/// Diagonalise [[ω_1P, g], [g, ω_1S + ω_c]] with ω_c = ω_1P − ω_1S − Δ.
/// All inputs in rad/fs.
pub fn dressed_states(omega_1s: f64, omega_1p: f64, g: f64, detuning: f64) -> Result<DressedStateResult, ScenarioError> {
    if !(g >= 0.0) || ![omega_1s, omega_1p, g, detuning].iter().all(|v| v.is_finite()) {
        return Err(ScenarioError::Invalid("coupling must be finite and non-negative".into()));
    }
    let omega_c = omega_1p - omega_1s - detuning;
    let a = omega_1p;
    let b = omega_1s + omega_c;
    let omega_rabi = (detuning * detuning + 4.0 * g * g).sqrt();
    let mean = 0.5 * (a + b);
    let (plus, minus) = if g == 0.0 {
        // bare states; the upper one is whichever diagonal entry is larger
        if a >= b {
            ([1.0, 0.0], [0.0, 1.0])
        } else {
            ([0.0, 1.0], [1.0, 0.0])
        }
    } else {
        let eig = SymmetricEigen::new(Matrix2::new(a, g, g, b));
        let (hi, lo) = if eig.eigenvalues[0] > eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let fix = |k: usize| {
            let v = eig.eigenvectors.column(k);
            // sign convention: positive |1P,0⟩ amplitude
            let s = if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) { -1.0 } else { 1.0 };
            [s * v[0], s * v[1]]
        };
        (fix(hi), fix(lo))
    };
    Ok(DressedStateResult {
        omega_rabi,
        e_plus: HBAR * (mean + 0.5 * omega_rabi),
        e_minus: HBAR * (mean - 0.5 * omega_rabi),
        plus,
        minus,
    })
}

/// g = d·E_vac/ħ in rad/fs for d in e·nm and a single-photon field in V/nm.
pub fn coupling_from_field(d_enm: f64, e_vac: f64) -> Result<f64, ScenarioError> {
    if !(d_enm >= 0.0 && e_vac >= 0.0) {
        return Err(ScenarioError::Invalid("dipole and field must be non-negative".into()));
    }
    Ok(d_enm * e_vac / HBAR)
}

/// C = 2g²/(κ γ_nr) with g angular and κ, γ_nr as rates, all in one time unit.
pub fn cooperativity(g: f64, kappa: f64, gamma_nr: f64) -> Result<f64, ScenarioError> {
    if !(kappa > 0.0 && gamma_nr > 0.0) {
        return Err(ScenarioError::Invalid("cooperativity needs positive loss rates".into()));
    }
    Ok(2.0 * g * g / (kappa * gamma_nr))
}

/// Cavity quality factor under both conventions for a given loss rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFactor {
    /// ω_c / κ with ω_c angular.
    pub angular: f64,
    /// f_c / κ with f_c = ω_c/2π.
    pub cyclic: f64,
}

pub fn quality_factor(omega_c: f64, kappa: f64) -> QualityFactor {
    QualityFactor { angular: omega_c / kappa, cyclic: omega_c / (2.0 * std::f64::consts::PI * kappa) }
}

/// Interior maxima of an oscillating series as (t, y) pairs. A maximum is
/// the highest sample of each excursion above 60 % of the range that is
/// bracketed by dips below 40 %; it is refined by a least-squares parabola
/// over a tenth of the excursion, so fast small ripples do not create extra
/// peaks.
pub fn oscillation_peaks(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let n = y.len().min(t.len());
    if n < 3 {
        return Vec::new();
    }
    let lo = y[..n].iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y[..n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    let (low, high) = (lo + 0.4 * (hi - lo), lo + 0.6 * (hi - lo));
    let mut peaks = Vec::new();
    let mut seen_low = false;
    let mut k = 0;
    while k < n {
        if y[k] < low {
            seen_low = true;
            k += 1;
            continue;
        }
        if y[k] <= high || !seen_low {
            k += 1;
            continue;
        }
        // excursion above `high`, closed by the next dip below `low`
        let start = k;
        let mut end = k;
        while end < n && y[end] >= low {
            end += 1;
        }
        if end == n {
            break;
        }
        let best = (start..end).fold(start, |b, i| if y[i] > y[b] { i } else { b });
        let m = ((end - start) / 10).max(1).min(best).min(n - 1 - best);
        peaks.push(refine(&t[best - m..=best + m], &y[best - m..=best + m]).unwrap_or((t[best], y[best])));
        seen_low = true;
        k = end;
    }
    peaks
}

/// Vertex of the least-squares parabola through equally spaced samples.
fn refine(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let m = (y.len() / 2) as f64;
    let h = t[1] - t[0];
    let (mut s2, mut s4, mut sy, mut sxy, mut sx2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let x = i as f64 - m;
        s2 += x * x;
        s4 += x * x * x * x;
        sy += v;
        sxy += x * v;
        sx2y += x * x * v;
    }
    let n = y.len() as f64;
    let c = (n * sx2y - s2 * sy) / (n * s4 - s2 * s2);
    let b = sxy / s2;
    let a = (sy - c * s2) / n;
    if !(c < 0.0) {
        return None;
    }
    let x = (-b / (2.0 * c)).clamp(-m, m);
    Some((t[0] + (x + m) * h, a + b * x + c * x * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{angular_from_ghz, prolate, rate_from_ghz};
    use crate::units::ElectronVolts;

    const W_EG: f64 = prolate::TRANSITION_EV / HBAR;

    #[test]
    fn resonant_splitting_and_compositions() {
        let g = angular_from_ghz(3.81);
        let r = dressed_states(0.0, W_EG, g, 0.0).unwrap();
        assert!(((r.e_plus - r.e_minus) - 2.0 * HBAR * g).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        assert!((r.plus[0] - s).abs() < 1e-12 && (r.plus[1] - s).abs() < 1e-12);
        assert!((r.minus[0] - s).abs() < 1e-12 && (r.minus[1] + s).abs() < 1e-12);
        // Ω = 2π × 7.62 GHz
        assert!((r.omega_rabi / angular_from_ghz(7.62) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_limit_is_bare() {
        let det = 0.01;
        let r = dressed_states(0.1, 0.4, 0.0, det).unwrap();
        assert_eq!(r.omega_rabi, det);
        assert_eq!(r.plus, [1.0, 0.0]);
        assert_eq!(r.minus, [0.0, 1.0]);
        // bare energies: ω_1P and ω_1S + ω_c
        assert!((r.e_plus - HBAR * 0.4).abs() < 1e-15);
        assert!((r.e_minus - HBAR * (0.4 - det)).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_block_diagonalisation() {
        for &(g, det) in &[(1e-4, 0.0), (2e-3, 5e-3), (0.01, -0.02), (0.05, 0.1)] {
            let (w1s, w1p) = (0.2, 0.55);
            let r = dressed_states(w1s, w1p, g, det).unwrap();
            let wc = w1p - w1s - det;
            let eig = SymmetricEigen::new(Matrix2::new(w1p, g, g, w1s + wc));
            let mut ev = [eig.eigenvalues[0] * HBAR, eig.eigenvalues[1] * HBAR];
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((r.e_minus - ev[0]).abs() < 1e-12);
            assert!((r.e_plus - ev[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_from_field(0.0, 1e-3).unwrap(), 0.0);
        let target = angular_from_ghz(3.81);
        let e_vac = target * HBAR / prolate::DIPOLE_ENM;
        assert!((e_vac / 2.9e-5 - 1.0).abs() < 0.02, "E_vac = {e_vac}");
        let g1 = coupling_from_field(0.3, 1e-4).unwrap();
        assert_eq!(coupling_from_field(0.6, 1e-4).unwrap(), 2.0 * g1);
        assert!(coupling_from_field(-0.1, 1.0).is_err());
    }

    #[test]
    fn cooperativity_examples() {
        let g = angular_from_ghz(3.81);
        let c = cooperativity(g, rate_from_ghz(0.02), rate_from_ghz(0.1)).unwrap();
        assert!((5.0e5..7.0e5).contains(&c), "C = {c}");
        assert_eq!(cooperativity(0.0, 1.0, 1.0).unwrap(), 0.0);
        let c2 = cooperativity(2.0 * g, rate_from_ghz(0.02), rate_from_ghz(0.1)).unwrap();
        assert!((c2 / c - 4.0).abs() < 1e-12);
        assert!(cooperativity(g, 0.0, 1.0).is_err());
    }

    #[test]
    fn quality_factor_conventions() {
        let wc = ElectronVolts(prolate::TRANSITION_EV).angular_frequency();
        let q = quality_factor(wc, rate_from_ghz(prolate::KAPPA_GHZ));
        assert!((q.angular / q.cyclic - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        // neither convention lands on 4.4e6 for κ = 0.02 GHz
        for v in [q.angular, q.cyclic] {
            assert!((v / 4.4e6 - 1.0).abs() > 0.5, "Q = {v}");
        }
    }

    #[test]
    fn peaks_survive_fast_ripple() {
        // cos²(ωt) with a ripple faster than the sampling, period 131 (units arbitrary)
        let w = std::f64::consts::PI / 131.0;
        let t: Vec<f64> = (0..=2000).map(|k| 0.25 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&t| (w * t).cos().powi(2) + 2e-4 * (97.3 * t).sin()).collect();
        let p = oscillation_peaks(&t, &y);
        assert_eq!(p.len(), 3, "{p:?}");
        for (k, (tp, yp)) in p.iter().enumerate() {
            assert!((tp - 131.0 * (k + 1) as f64).abs() < 0.5, "{tp}");
            assert!((yp - 1.0).abs() < 1e-3);
        }
        assert!(oscillation_peaks(&t, &vec![0.3; t.len()]).is_empty());
    }
}
