use serde::{Deserialize, Serialize};

use super::DftError;

pub const MIN_POINTS: usize = 256;

/// Uniform cell-centred radial grid, r_i = (i + ½)·dr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self { r_max: 8.0, n: 2048 }
    }
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self, DftError> {
        if n < MIN_POINTS {
            return Err(DftError::Grid(format!("need at least {MIN_POINTS} points, got {n}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(DftError::Grid(format!("r_max must be positive, got {r_max}")));
        }
        Ok(Self { r_max, n })
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    /// Midpoint volume weights 4π r_i² dr.
    pub fn weights(&self) -> Vec<f64> {
        let dr = self.dr();
        (0..self.n).map(|i| 4.0 * std::f64::consts::PI * self.r(i).powi(2) * dr).collect()
    }

    /// Face couplings A_f/dr for the faces between cells i and i+1.
    pub fn face_couplings(&self) -> Vec<f64> {
        let dr = self.dr();
        (0..self.n - 1)
            .map(|i| 4.0 * std::f64::consts::PI * ((i + 1) as f64 * dr).powi(2) / dr)
            .collect()
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.n == other.n && (self.r_max - other.r_max).abs() <= 1e-12 * self.r_max
    }
}

/// K x with (K x)_i = Σ_f c_f (x_i − x_j): the symmetric stiffness form of −∇²
/// (Neumann at both ends).
pub fn stiffness_apply(faces: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for f in 0..n - 1 {
        let flux = faces[f] * (x[f] - x[f + 1]);
        out[f] += flux;
        out[f + 1] -= flux;
    }
}
