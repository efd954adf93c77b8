use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::operator::{c, hermitian_eigenvalues, kron, CMatrix, HilbertSpace, Operator};
use super::LindbladError;

const TRACE_TOL: f64 = 1e-9;
const HERM_TOL: f64 = 1e-9;
const NEG_TOL: f64 = 1e-8;

/// Validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, rho: CMatrix) -> Result<Self, LindbladError> {
        let d = space.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(LindbladError::DimensionMismatch { expected: d, found: rho.nrows() });
        }
        let state = Self { space, rho };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn unchecked(space: HilbertSpace, rho: CMatrix) -> Self {
        Self { space, rho }
    }

    /// |ψ⟩⟨ψ| for a state vector, normalised on the way in.
    pub fn pure(space: HilbertSpace, psi: &[Complex64]) -> Result<Self, LindbladError> {
        let d = space.dim();
        if psi.len() != d {
            return Err(LindbladError::DimensionMismatch { expected: d, found: psi.len() });
        }
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LindbladError::InvalidState("zero state vector".into()));
        }
        let v = v / c(norm);
        let rho = &v * v.adjoint();
        Ok(Self { space, rho })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self, LindbladError> {
        let d = space.dim();
        if index >= d {
            return Err(LindbladError::InvalidState(format!("basis index {index} >= {d}")));
        }
        let mut rho = CMatrix::zeros(d, d);
        rho[(index, index)] = c(1.0);
        Ok(Self { space, rho })
    }

    /// Product basis state |k_0, k_1, …⟩.
    pub fn product_basis(space: HilbertSpace, digits: &[usize]) -> Result<Self, LindbladError> {
        if digits.len() != space.factors() || digits.iter().zip(space.dims()).any(|(k, d)| k >= d) {
            return Err(LindbladError::InvalidState(format!("bad basis digits {digits:?}")));
        }
        let idx = space.index(digits);
        Self::basis(space, idx)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self, LindbladError> {
        let mut dims = self.space.dims().to_vec();
        dims.extend_from_slice(other.space.dims());
        let space = HilbertSpace::new(dims)?;
        Ok(Self { space, rho: kron(&self.rho, &other.rho) })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_ij|² for hermitian ρ
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn expectation(&self, op: &Operator) -> Result<f64, LindbladError> {
        if op.space() != &self.space {
            return Err(LindbladError::SpaceMismatch);
        }
        Ok(expectation_raw(op.matrix(), &self.rho))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Unitary conjugation U ρ U†.
    pub fn transform(&self, u: &CMatrix) -> Result<Self, LindbladError> {
        let d = self.space.dim();
        if u.nrows() != d || u.ncols() != d {
            return Err(LindbladError::DimensionMismatch { expected: d, found: u.nrows() });
        }
        Ok(Self { space: self.space.clone(), rho: u * &self.rho * u.adjoint() })
    }

    pub fn validate(&self) -> Result<(), LindbladError> {
        if self.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LindbladError::InvalidState("non-finite entries".into()));
        }
        let tr = self.trace();
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(LindbladError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = self.hermiticity_error();
        if herm > HERM_TOL {
            return Err(LindbladError::InvalidState(format!("not hermitian ({herm:e})")));
        }
        let min = self.min_eigenvalue();
        if min < -NEG_TOL {
            return Err(LindbladError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

/// Re tr(O ρ).
pub(crate) fn expectation_raw(op: &CMatrix, rho: &CMatrix) -> f64 {
    let d = rho.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (op[(i, j)] * rho[(j, i)]).re;
        }
    }
    acc
}

/// Reduced state on the factors in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix, LindbladError> {
    let space = rho.space();
    let nf = space.factors();
    if keep.is_empty() {
        return Err(LindbladError::InvalidFactor(usize::MAX));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= nf) {
        return Err(LindbladError::InvalidFactor(bad));
    }
    if kept.len() != keep.len() {
        return Err(LindbladError::InvalidSpace(format!("repeated factor in {keep:?}")));
    }
    if kept.len() == nf {
        return Ok(rho.clone());
    }
    let dims = space.dims();
    let sub = HilbertSpace::new(kept.iter().map(|&k| dims[k]).collect())?;
    let traced: Vec<usize> = (0..nf).filter(|k| !kept.contains(k)).collect();
    let d = space.dim();
    let digits: Vec<Vec<usize>> = (0..d).map(|i| space.digits(i)).collect();
    let sub_index: Vec<usize> =
        digits.iter().map(|dg| kept.iter().fold(0, |acc, &k| acc * dims[k] + dg[k])).collect();
    let env_index: Vec<usize> =
        digits.iter().map(|dg| traced.iter().fold(0, |acc, &k| acc * dims[k] + dg[k])).collect();
    let ds = sub.dim();
    let mut out = CMatrix::zeros(ds, ds);
    let m = rho.matrix();
    for i in 0..d {
        for j in 0..d {
            if env_index[i] == env_index[j] {
                out[(sub_index[i], sub_index[j])] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::unchecked(sub, out))
}

/// Wootters concurrence of a two-qubit state.
///
/// Uses the hermitian form √ρ ρ̃ √ρ, whose eigenvalues are the squares of the
/// λ_i in C = max(0, λ1 − λ2 − λ3 − λ4).
pub fn concurrence(rho: &DensityMatrix) -> Result<f64, LindbladError> {
    if rho.space().dims() != [2, 2] {
        return Err(LindbladError::DimensionMismatch { expected: 4, found: rho.space().dim() });
    }
    let m = rho.matrix();
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    // Eigenvalues at roundoff level are zeroed before square roots are taken,
    // otherwise 1e-17 noise turns into 3e-9 noise in C.
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let sqrt_vals = CMatrix::from_diagonal(&eig.eigenvalues.map(|v| c(snap(v, top).sqrt())));
    let sqrt_rho = &eig.eigenvectors * sqrt_vals * eig.eigenvectors.adjoint();
    let yy = {
        let y = super::operator::pauli_y().into_matrix();
        kron(&y, &y)
    };
    let tilde = &yy * m.conjugate() * &yy;
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let ev = hermitian_eigenvalues(&r);
    let top = ev[ev.len() - 1];
    let mut lambdas: Vec<f64> = ev.into_iter().map(|v| snap(v, top).sqrt()).collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let conc = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(conc.clamp(0.0, 1.0))
}

fn snap(v: f64, top: f64) -> f64 {
    if v <= 1e-13 * top.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q2() -> HilbertSpace {
        HilbertSpace::new(vec![2, 2]).unwrap()
    }

    fn bell(sign: f64) -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::pure(q2(), &[c(0.0), c(s), c(sign * s), c(0.0)]).unwrap()
    }

    fn random_complex(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(r, cols, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_state(rng: &mut ChaCha8Rng, space: HilbertSpace) -> DensityMatrix {
        let d = space.dim();
        let a = random_complex(rng, d, d);
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(space, m / tr).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        random_complex(rng, d, d).qr().q()
    }

    #[test]
    fn validation_rejects_bad_states() {
        let s = HilbertSpace::single(2).unwrap();
        let bad_trace = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.7), c(0.7)]));
        assert!(DensityMatrix::new(s.clone(), bad_trace).is_err());
        let negative = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(DensityMatrix::new(s.clone(), negative).is_err());
        let mut nonherm = CMatrix::identity(2, 2) * c(0.5);
        nonherm[(0, 1)] = c(0.1);
        assert!(DensityMatrix::new(s, nonherm).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_state(&mut rng, HilbertSpace::single(2).unwrap());
        let b = random_state(&mut rng, HilbertSpace::single(3).unwrap());
        let ab = a.tensor(&b).unwrap();
        let ra = partial_trace(&ab, &[0]).unwrap();
        assert!((ra.matrix() - a.matrix()).iter().all(|z| z.norm() < 1e-14));
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert!((rb.matrix() - b.matrix()).iter().all(|z| z.norm() < 1e-14));
        assert_eq!(partial_trace(&ab, &[0, 1]).unwrap(), ab);

        let half = partial_trace(&bell(1.0), &[1]).unwrap();
        let mixed = CMatrix::identity(2, 2) * c(0.5);
        assert!((half.matrix() - mixed).iter().all(|z| z.norm() < 1e-15));

        assert!(partial_trace(&ab, &[]).is_err());
        assert!(partial_trace(&ab, &[2]).is_err());
        assert!(partial_trace(&ab, &[0, 0]).is_err());
    }

    #[test]
    fn partial_trace_keeps_middle_factor() {
        // |0⟩⊗|2⟩⊗|1⟩ on [2,3,2]: keeping factor 1 gives |2⟩⟨2|
        let space = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let rho = DensityMatrix::product_basis(space, &[0, 2, 1]).unwrap();
        let red = partial_trace(&rho, &[1]).unwrap();
        assert_eq!(red.space().dims(), &[3]);
        assert_eq!(red.population(2), 1.0);
        let red02 = partial_trace(&rho, &[2, 0]).unwrap();
        assert_eq!(red02.population(1), 1.0);
    }

    #[test]
    fn concurrence_examples() {
        let s01 = DensityMatrix::product_basis(q2(), &[0, 1]).unwrap();
        assert_eq!(concurrence(&s01).unwrap(), 0.0);
        assert!((concurrence(&bell(1.0)).unwrap() - 1.0).abs() < 1e-7);
        assert!((concurrence(&bell(-1.0)).unwrap() - 1.0).abs() < 1e-7);
        let mix = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0), c(0.5), c(0.5), c(0.0)]));
        let mix = DensityMatrix::new(q2(), mix).unwrap();
        assert!(concurrence(&mix).unwrap().abs() < 1e-7);
        assert!(concurrence(&DensityMatrix::basis(HilbertSpace::single(4).unwrap(), 0).unwrap()).is_err());
    }

    #[test]
    fn concurrence_of_partially_entangled_pure_state() {
        // a|01⟩ + b|10⟩ has C = 2|ab|
        for &theta in &[0.1f64, 0.4, 0.7, 1.2] {
            let (a, b) = (theta.cos(), theta.sin());
            let rho = DensityMatrix::pure(q2(), &[c(0.0), c(a), c(b), c(0.0)]).unwrap();
            let expect = 2.0 * (a * b).abs();
            assert!((concurrence(&rho).unwrap() - expect).abs() < 1e-7);
        }
    }

    #[test]
    fn werner_state_concurrence() {
        // p·Bell + (1−p)·I/4: C = max(0, (3p − 1)/2)
        for &p in &[0.2, 0.5, 0.8] {
            let m = bell(1.0).matrix() * c(p) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0);
            let rho = DensityMatrix::new(q2(), m).unwrap();
            let expect = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
            assert!((concurrence(&rho).unwrap() - expect).abs() < 1e-7);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduced_states_have_unit_trace(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4, keep in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, HilbertSpace::new(vec![d1, d2]).unwrap());
            let red = partial_trace(&rho, &[keep]).unwrap();
            prop_assert!((red.trace() - c(1.0)).norm() < 1e-12);
            prop_assert!(red.validate().is_ok());
        }

        #[test]
        fn concurrence_is_local_unitary_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // mix a random pure state with a little noise so both regimes appear
            let psi: Vec<Complex64> = (0..4).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let pure = DensityMatrix::pure(q2(), &psi).unwrap();
            let noise = random_state(&mut rng, q2());
            let p = rng.gen_range(0.5..1.0);
            let rho = DensityMatrix::new(q2(), pure.matrix() * c(p) + noise.matrix() * c(1.0 - p)).unwrap();
            let u = kron(&random_unitary(&mut rng, 2), &random_unitary(&mut rng, 2));
            let c0 = concurrence(&rho).unwrap();
            let c1 = concurrence(&rho.transform(&u).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&c0));
            prop_assert!((c0 - c1).abs() < 1e-8, "{} vs {}", c0, c1);
        }

        #[test]
        fn product_states_are_unentangled(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_state(&mut rng, HilbertSpace::single(2).unwrap());
            let b = random_state(&mut rng, HilbertSpace::single(2).unwrap());
            prop_assert!(concurrence(&a.tensor(&b).unwrap()).unwrap() < 1e-7);
        }
    }
}
