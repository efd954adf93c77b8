use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::dft::{
    dipole_element, electron_spectrum, relax_ground_bubble, BubbleProfile, DftParams, RadialGrid, Spectrum,
};
use crate::lindblad::{CMatrix, HilbertSpace, Operator};
use crate::units::HBAR;

/// Levels with angular frequencies (rad/fs) and a signed dipole matrix
/// (e·nm) for light polarised along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTable {
    pub labels: Vec<String>,
    pub omega: Vec<f64>,
    pub dipole: Vec<Vec<f64>>,
}

impl LevelTable {
    pub fn new(labels: Vec<String>, omega: Vec<f64>, dipole: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        let n = labels.len();
        if n < 2 {
            return Err(ScenarioError::Invalid("a level table needs at least two levels".into()));
        }
        if omega.len() != n || dipole.len() != n || dipole.iter().any(|row| row.len() != n) {
            return Err(ScenarioError::Invalid("level table shapes disagree".into()));
        }
        if omega.iter().chain(dipole.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(ScenarioError::Invalid("non-finite level table entry".into()));
        }
        for i in 0..n {
            if dipole[i][i] != 0.0 {
                return Err(ScenarioError::Invalid(format!("diagonal dipole of {} must vanish", labels[i])));
            }
            for j in 0..i {
                if dipole[i][j] != dipole[j][i] {
                    return Err(ScenarioError::Invalid(format!(
                        "dipole {}-{} is not symmetric",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != n {
            return Err(ScenarioError::Invalid("duplicate level labels".into()));
        }
        Ok(Self { labels, omega, dipole })
    }

    /// Every bound level of a spectrum, ordered by energy.
    pub fn from_spectrum(spectrum: &Spectrum) -> Result<Self, ScenarioError> {
        let mut levels: Vec<_> = spectrum.bound().collect();
        levels.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
        let n = levels.len();
        let mut dipole = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                let d = dipole_element(levels[i], levels[j])?;
                dipole[i][j] = d;
                dipole[j][i] = d;
            }
        }
        Self::new(
            levels.iter().map(|l| l.label.to_string()).collect(),
            levels.iter().map(|l| l.energy / HBAR).collect(),
            dipole,
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub(crate) fn require(&self, label: &str) -> Result<usize, ScenarioError> {
        self.index(label).ok_or_else(|| ScenarioError::Invalid(format!("level {label} missing from the table")))
    }

    pub fn energy_ev(&self, k: usize) -> f64 {
        self.omega[k] * HBAR
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::single(self.len()).expect("at least two levels")
    }

    /// H0 = Σ ω_k |k⟩⟨k|, rad/fs.
    pub fn h0(&self) -> Operator {
        let n = self.len();
        let m = CMatrix::from_fn(n, n, |i, j| if i == j { self.omega[i].into() } else { 0.0.into() });
        Operator::new(self.space(), m).expect("square by construction")
    }

    /// H1 = Σ d_jk |j⟩⟨k| / ħ: rad/fs per V/nm.
    pub fn h1(&self) -> Operator {
        let n = self.len();
        let m = CMatrix::from_fn(n, n, |i, j| (self.dipole[i][j] / HBAR).into());
        Operator::new(self.space(), m).expect("square by construction")
    }

    /// Projector |k⟩⟨k|.
    pub fn projector(&self, k: usize) -> Operator {
        let n = self.len();
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = 1.0.into();
        Operator::new(self.space(), m).expect("square by construction")
    }

    /// Keep only the named levels, in the given order.
    pub fn restrict(&self, labels: &[&str]) -> Result<Self, ScenarioError> {
        let idx: Vec<usize> = labels.iter().map(|l| self.require(l)).collect::<Result<_, _>>()?;
        Self::new(
            idx.iter().map(|&k| self.labels[k].clone()).collect(),
            idx.iter().map(|&k| self.omega[k]).collect(),
            idx.iter().map(|&i| idx.iter().map(|&j| self.dipole[i][j]).collect()).collect(),
        )
    }
}

/// Relax the ground bubble at `pressure_bar` and tabulate its bound levels.
pub fn default_level_table(
    params: &DftParams,
    grid: RadialGrid,
    pressure_bar: f64,
) -> Result<(LevelTable, BubbleProfile, Spectrum), ScenarioError> {
    let profile = relax_ground_bubble(params, grid, pressure_bar)?;
    let spectrum = electron_spectrum(&profile, 6, 4);
    let table = LevelTable::from_spectrum(&spectrum)?;
    Ok((table, profile, spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_level() -> LevelTable {
        LevelTable::new(
            vec!["1S".into(), "1P".into(), "2S".into()],
            vec![0.3, 0.6, 1.2],
            vec![vec![0.0, 0.4, 0.0], vec![0.4, 0.0, 0.25], vec![0.0, 0.25, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let ok = three_level();
        assert_eq!(ok.index("2S"), Some(2));
        let asym = LevelTable::new(
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0],
            vec![vec![0.0, 0.1], vec![0.2, 0.0]],
        );
        assert!(asym.is_err());
        let diag = LevelTable::new(
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0],
            vec![vec![0.1, 0.0], vec![0.0, 0.0]],
        );
        assert!(diag.is_err());
        let dup = LevelTable::new(vec!["a".into(), "a".into()], vec![0.0, 1.0], vec![vec![0.0; 2]; 2]);
        assert!(dup.is_err());
    }

    #[test]
    fn hamiltonian_pieces() {
        let t = three_level();
        assert!(t.h0().is_hermitian() && t.h1().is_hermitian());
        assert!((t.h1().matrix()[(0, 1)].re - 0.4 / HBAR).abs() < 1e-15);
        let r = t.restrict(&["1S", "2S"]).unwrap();
        assert_eq!(r.dipole, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(t.restrict(&["3D"]).is_err());
    }
}
