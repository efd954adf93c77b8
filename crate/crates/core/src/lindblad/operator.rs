use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LindbladError;

pub type CMatrix = DMatrix<Complex64>;

pub const MAX_DIM: usize = 4096;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ordered tensor-product factors, e.g. `[2, 2, 2]` for two qubits and a
/// truncated cavity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self, LindbladError> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(LindbladError::InvalidSpace(format!("factor dimensions must be >= 2: {dims:?}")));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= MAX_DIM => Ok(Self { dims }),
            _ => Err(LindbladError::InvalidSpace(format!("total dimension exceeds {MAX_DIM}: {dims:?}"))),
        }
    }

    pub fn single(dim: usize) -> Result<Self, LindbladError> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    /// Mixed-radix digits of a basis index, most significant factor first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (d, n)| acc * n + d)
    }
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self, LindbladError> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(LindbladError::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    /// Operator that must be hermitian to 1e-12 (max-norm).
    pub fn hermitian(space: HilbertSpace, matrix: CMatrix) -> Result<Self, LindbladError> {
        let op = Self::new(space, matrix)?;
        let dev = op.hermiticity_error();
        if dev >= 1e-12 {
            return Err(LindbladError::NotHermitian(dev));
        }
        Ok(op)
    }

    pub fn from_real(space: HilbertSpace, rows: &[&[f64]]) -> Result<Self, LindbladError> {
        let d = rows.len();
        let m = CMatrix::from_fn(d, d, |i, j| c(rows[i][j]));
        Self::new(space, m)
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: CMatrix::zeros(d, d) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: CMatrix::identity(d, d) }
    }

    /// |i⟩⟨j| on a single-factor space of dimension `dim`.
    pub fn transition(dim: usize, i: usize, j: usize) -> Result<Self, LindbladError> {
        let space = HilbertSpace::single(dim)?;
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, j)] = c(1.0);
        Self::new(space, m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let d = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < 1e-12
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * c(s) }
    }

    pub fn add(&self, other: &Operator) -> Result<Self, LindbladError> {
        self.check_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self, LindbladError> {
        self.check_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self, LindbladError> {
        self.check_space(other)?;
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Self { space: self.space.clone(), matrix: m })
    }

    pub(crate) fn check_space(&self, other: &Operator) -> Result<(), LindbladError> {
        if self.space != other.space {
            return Err(LindbladError::SpaceMismatch);
        }
        Ok(())
    }

    /// Eigenvalues of a hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Lift `local` acting on factor `k` to I ⊗ … ⊗ local ⊗ … ⊗ I.
pub fn embed(local: &Operator, k: usize, space: &HilbertSpace) -> Result<Operator, LindbladError> {
    let dims = space.dims();
    if k >= dims.len() {
        return Err(LindbladError::InvalidFactor(k));
    }
    if local.space.dim() != dims[k] {
        return Err(LindbladError::DimensionMismatch { expected: dims[k], found: local.space.dim() });
    }
    let mut m = CMatrix::identity(1, 1);
    for (f, &d) in dims.iter().enumerate() {
        let factor = if f == k { local.matrix.clone() } else { CMatrix::identity(d, d) };
        m = kron(&m, &factor);
    }
    Operator::new(space.clone(), m)
}

/// Truncated bosonic annihilation operator a|n⟩ = √n |n−1⟩.
pub fn annihilation(dim: usize) -> Result<Operator, LindbladError> {
    let space = HilbertSpace::single(dim)?;
    let m = CMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) });
    Operator::new(space, m)
}

pub fn pauli_x() -> Operator {
    Operator::from_real(HilbertSpace::single(2).unwrap(), &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn pauli_y() -> Operator {
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), c(0.0)],
    );
    Operator::new(HilbertSpace::single(2).unwrap(), m).unwrap()
}

pub fn pauli_z() -> Operator {
    Operator::from_real(HilbertSpace::single(2).unwrap(), &[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(rng: &mut ChaCha8Rng, d: usize) -> Operator {
        let m = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        Operator::new(HilbertSpace::single(d).unwrap(), m).unwrap()
    }

    #[test]
    fn space_guards() {
        assert!(HilbertSpace::new(vec![2, 1]).is_err());
        assert!(HilbertSpace::new(vec![]).is_err());
        assert!(HilbertSpace::new(vec![64, 65]).is_err());
        let s = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.dim(), 12);
        for i in 0..12 {
            assert_eq!(s.index(&s.digits(i)), i);
        }
    }

    #[test]
    fn embed_identity_and_basis_action() {
        let space = HilbertSpace::new(vec![2, 2]).unwrap();
        let id = Operator::identity(&HilbertSpace::single(2).unwrap());
        assert_eq!(embed(&id, 1, &space).unwrap(), Operator::identity(&space));
        // σx on factor 0 maps |00⟩ → |10⟩
        let x0 = embed(&pauli_x(), 0, &space).unwrap();
        let col = x0.matrix().column(space.index(&[0, 0])).clone_owned();
        assert_eq!(col[space.index(&[1, 0])], c(1.0));
        assert_eq!(col.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!(embed(&pauli_x(), 1, &HilbertSpace::new(vec![2, 3]).unwrap()).is_err());
        assert!(embed(&pauli_x(), 2, &space).is_err());
    }

    #[test]
    fn embedded_factors_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        for _ in 0..5 {
            let a = embed(&random_op(&mut rng, 2), 0, &space).unwrap();
            let b = embed(&random_op(&mut rng, 3), 1, &space).unwrap();
            let comm = a.commutator(&b).unwrap();
            assert!(comm.matrix().iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn ladder_operator() {
        assert!(annihilation(1).is_err());
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2.matrix()[(0, 1)], c(1.0));
        assert_eq!(a2.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let a3 = annihilation(3).unwrap();
        assert!((a3.matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        for dim in 2..6 {
            let a = annihilation(dim).unwrap();
            let num = a.dagger().mul(&a).unwrap();
            for k in 0..dim {
                assert!((num.matrix()[(k, k)].re - k as f64).abs() < 1e-14);
            }
            // [a, a†] = 1 except the truncated top level
            let comm = a.commutator(&a.dagger()).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i == j && i < dim - 1 { 1.0 } else if i == j { -((dim - 1) as f64) } else { 0.0 };
                    assert!((comm.matrix()[(i, j)] - c(expect)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn hermitian_check() {
        let s = HilbertSpace::single(2).unwrap();
        assert!(Operator::hermitian(s.clone(), pauli_y().into_matrix()).is_ok());
        let bad = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(Operator::hermitian(s, bad), Err(LindbladError::NotHermitian(_))));
    }
}
