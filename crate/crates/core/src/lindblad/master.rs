use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{c, hermitian_eigenvalues, CMatrix, HilbertSpace, Operator};
use super::state::{expectation_raw, DensityMatrix};
use super::LindbladError;

const GUARD_TOL: f64 = 1e-6;

/// Decay channel γ·D[C] with D[C]ρ = CρC† − ½{C†C, ρ}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    pub op: Operator,
    pub rate: f64,
}

impl Dissipator {
    pub fn new(op: Operator, rate: f64) -> Result<Self, LindbladError> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(LindbladError::InvalidRate(rate));
        }
        Ok(Self { op, rate })
    }
}

/// E(t) = G(t)·ℰ·cos(ω0 t) with G(t) = exp(−2 ln2 (t − t_c)²/W²), so that
/// the envelope of E² has full width at half maximum W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveEnvelope {
    pub peak_field: f64,
    pub carrier: f64,
    pub width_fs: f64,
    pub center_fs: f64,
}

impl DriveEnvelope {
    pub fn gaussian(peak_field: f64, carrier: f64, width_fs: f64, center_fs: f64) -> Result<Self, LindbladError> {
        if !(width_fs > 0.0 && width_fs.is_finite()) {
            return Err(LindbladError::InvalidSpec(format!("pulse width must be positive, got {width_fs}")));
        }
        if !(carrier >= 0.0 && carrier.is_finite() && peak_field.is_finite() && center_fs.is_finite()) {
            return Err(LindbladError::InvalidSpec("non-finite drive parameters".into()));
        }
        Ok(Self { peak_field, carrier, width_fs, center_fs })
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center_fs) / self.width_fs;
        (-2.0 * std::f64::consts::LN_2 * x * x).exp()
    }

    pub fn field(&self, t: f64) -> f64 {
        self.envelope(t) * self.peak_field * (self.carrier * t).cos()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.carrier
    }
}

/// Coupling operator (rad/fs per V/nm) multiplied by a drive field.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    pub coupling: Operator,
    pub drive: DriveEnvelope,
}

pub type ObservableFn = Arc<dyn Fn(&DensityMatrix) -> f64 + Send + Sync>;

/// Quantity recorded along a trajectory.
#[derive(Clone)]
pub enum Observable {
    Expectation { name: String, op: Operator },
    Custom { name: String, f: ObservableFn },
}

impl Observable {
    pub fn expectation(name: impl Into<String>, op: Operator) -> Self {
        Observable::Expectation { name: name.into(), op }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&DensityMatrix) -> f64 + Send + Sync + 'static) -> Self {
        Observable::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        match self {
            Observable::Expectation { name, .. } | Observable::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub observables: Vec<Observable>,
    pub record_states: bool,
}

impl PropagationSpec {
    pub fn new(t_start: f64, t_end: f64, dt: f64, stride: usize) -> Self {
        Self { t_start, t_end, dt, stride, observables: Vec::new(), record_states: false }
    }

    pub fn observe(mut self, obs: Observable) -> Self {
        self.observables.push(obs);
        self
    }

    pub fn with_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Recorded trajectory: one value per observable per output time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub states: Option<Vec<DensityMatrix>>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_error: f64,
    pub steps: usize,
}

impl TimeSeries {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|k| self.values[k].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.last().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.as_ref().and_then(|s| s.last())
    }
}

/// dρ/dt = −i[H, ρ] + Σ γ D[C]ρ.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Operator, dissipators: &[Dissipator]) -> Result<CMatrix, LindbladError> {
    check_operands(rho.space(), h, &[], dissipators)?;
    let gen = Generator::new(h, &[], dissipators);
    let d = rho.space().dim();
    let mut out = CMatrix::zeros(d, d);
    let mut work = Work::new(d);
    gen.apply(0.0, rho.matrix(), &mut out, &mut work);
    Ok(out)
}

/// Fixed-step RK4 integration of the master equation with
/// H(t) = H_static + Σ_j E_j(t)·H1_j, in the frame the operators are given in.
pub fn propagate(
    rho0: &DensityMatrix,
    h_static: &Operator,
    drives: &[DriveTerm],
    dissipators: &[Dissipator],
    spec: &PropagationSpec,
) -> Result<TimeSeries, LindbladError> {
    check_operands(rho0.space(), h_static, drives, dissipators)?;
    rho0.validate()?;
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(LindbladError::InvalidSpec(format!("dt must be positive, got {}", spec.dt)));
    }
    if !(spec.t_end > spec.t_start) {
        return Err(LindbladError::InvalidSpec("t_end must exceed t_start".into()));
    }
    if spec.stride == 0 {
        return Err(LindbladError::InvalidSpec("stride must be at least 1".into()));
    }
    for obs in &spec.observables {
        if let Observable::Expectation { op, .. } = obs {
            if op.space() != rho0.space() {
                return Err(LindbladError::SpaceMismatch);
            }
        }
    }
    let limit = step_limit(h_static, drives);
    if spec.dt > limit {
        return Err(LindbladError::StepTooLarge { dt: spec.dt, limit });
    }

    let space = rho0.space().clone();
    let d = space.dim();
    let gen = Generator::new(h_static, drives, dissipators);
    let steps = spec.steps();
    let dt = (spec.t_end - spec.t_start) / steps as f64;

    let mut series = TimeSeries {
        times: Vec::new(),
        names: spec.observables.iter().map(|o| o.name().to_string()).collect(),
        values: vec![Vec::new(); spec.observables.len()],
        states: spec.record_states.then(Vec::new),
        max_trace_drift: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_hermiticity_error: 0.0,
        steps,
    };

    let mut y = rho0.matrix().clone();
    let mut acc = CMatrix::zeros(d, d);
    let mut k = CMatrix::zeros(d, d);
    let mut stage = CMatrix::zeros(d, d);
    let mut work = Work::new(d);

    record(&mut series, spec, &space, &y, spec.t_start, dt)?;
    for step in 0..steps {
        let t = spec.t_start + step as f64 * dt;
        gen.apply(t, &y, &mut k, &mut work);
        axpy_into(&mut acc, &k, 1.0, None);
        axpy_into(&mut stage, &k, 0.5 * dt, Some(&y));
        gen.apply(t + 0.5 * dt, &stage, &mut k, &mut work);
        add_scaled(&mut acc, &k, 2.0);
        axpy_into(&mut stage, &k, 0.5 * dt, Some(&y));
        gen.apply(t + 0.5 * dt, &stage, &mut k, &mut work);
        add_scaled(&mut acc, &k, 2.0);
        axpy_into(&mut stage, &k, dt, Some(&y));
        gen.apply(t + dt, &stage, &mut k, &mut work);
        add_scaled(&mut acc, &k, 1.0);
        add_scaled(&mut y, &acc, dt / 6.0);
        if (step + 1) % spec.stride == 0 || step + 1 == steps {
            let t_out = spec.t_start + (step + 1) as f64 * dt;
            record(&mut series, spec, &space, &y, t_out, dt)?;
        }
    }
    Ok(series)
}

/// out = base + s·k, or out = s·k when no base is given.
fn axpy_into(out: &mut CMatrix, k: &CMatrix, s: f64, base: Option<&CMatrix>) {
    let o = out.as_mut_slice();
    let ks = k.as_slice();
    match base {
        Some(b) => {
            for ((o, k), b) in o.iter_mut().zip(ks).zip(b.as_slice()) {
                *o = b + k * s;
            }
        }
        None => {
            for (o, k) in o.iter_mut().zip(ks) {
                *o = k * s;
            }
        }
    }
}

fn add_scaled(out: &mut CMatrix, k: &CMatrix, s: f64) {
    for (o, k) in out.as_mut_slice().iter_mut().zip(k.as_slice()) {
        *o += k * s;
    }
}

fn record(
    series: &mut TimeSeries,
    spec: &PropagationSpec,
    space: &HilbertSpace,
    y: &CMatrix,
    t: f64,
    dt: f64,
) -> Result<(), LindbladError> {
    let trace_drift = (y.trace() - c(1.0)).norm();
    let min_eig = if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        hermitian_eigenvalues(y)[0]
    } else {
        f64::NEG_INFINITY
    };
    let herm = (y - y.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    series.max_trace_drift = series.max_trace_drift.max(trace_drift);
    series.min_eigenvalue = series.min_eigenvalue.min(min_eig);
    series.max_hermiticity_error = series.max_hermiticity_error.max(herm);
    if !(trace_drift <= GUARD_TOL) || !(min_eig >= -GUARD_TOL) {
        return Err(LindbladError::GuardAbort {
            time_fs: t,
            trace_drift,
            min_eigenvalue: min_eig,
            advice: format!("reduce dt below {dt:e} fs (try {:e})", dt / 4.0),
        });
    }
    let state = DensityMatrix::unchecked(space.clone(), y.clone());
    series.times.push(t);
    for (vals, obs) in series.values.iter_mut().zip(&spec.observables) {
        let v = match obs {
            Observable::Expectation { op, .. } => expectation_raw(op.matrix(), y),
            Observable::Custom { f, .. } => f(&state),
        };
        vals.push(v);
    }
    if let Some(states) = series.states.as_mut() {
        states.push(state);
    }
    Ok(())
}

/// Largest admissible step: a fortieth of the shortest carrier period when
/// driven, otherwise 1/(20·ω_max) with ω_max the spread of H_static.
pub fn step_limit(h_static: &Operator, drives: &[DriveTerm]) -> f64 {
    let driven: Vec<&DriveTerm> = drives.iter().filter(|d| d.drive.carrier > 0.0).collect();
    if !driven.is_empty() {
        return driven.iter().map(|d| d.drive.period() / 40.0).fold(f64::INFINITY, f64::min);
    }
    let ev = hermitian_eigenvalues(h_static.matrix());
    let spread = ev[ev.len() - 1] - ev[0];
    if spread > 0.0 {
        1.0 / (20.0 * spread)
    } else {
        f64::INFINITY
    }
}

fn check_operands(
    space: &HilbertSpace,
    h: &Operator,
    drives: &[DriveTerm],
    dissipators: &[Dissipator],
) -> Result<(), LindbladError> {
    if h.space() != space {
        return Err(LindbladError::SpaceMismatch);
    }
    let herm = h.hermiticity_error();
    if herm >= 1e-12 {
        return Err(LindbladError::NotHermitian(herm));
    }
    for term in drives {
        if term.coupling.space() != space {
            return Err(LindbladError::SpaceMismatch);
        }
        let herm = term.coupling.hermiticity_error();
        if herm >= 1e-12 {
            return Err(LindbladError::NotHermitian(herm));
        }
    }
    for diss in dissipators {
        if diss.op.space() != space {
            return Err(LindbladError::SpaceMismatch);
        }
        if !(diss.rate >= 0.0 && diss.rate.is_finite()) {
            return Err(LindbladError::InvalidRate(diss.rate));
        }
    }
    Ok(())
}

struct Work {
    tmp: CMatrix,
}

impl Work {
    fn new(d: usize) -> Self {
        Self { tmp: CMatrix::zeros(d, d) }
    }
}

/// Nonzero entries (row, col, value) of a matrix.
type Triplets = Vec<(usize, usize, Complex64)>;

fn triplets(m: &CMatrix) -> Triplets {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != 0.0 || v.im != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Precomputed pieces of the generator. With H_eff = H − (i/2)Σγ C†C,
/// dρ/dt = K + K† + Σ γ CρC† where K = −i H_eff ρ. The operators are kept as
/// sparse triplets since the model Hamiltonians are mostly empty.
struct Generator {
    h_eff: Triplets,
    drives: Vec<(Triplets, DriveEnvelope)>,
    jumps: Vec<(Triplets, f64)>,
}

impl Generator {
    fn new(h: &Operator, drives: &[DriveTerm], dissipators: &[Dissipator]) -> Self {
        let mut h_eff = h.matrix().clone();
        let mut jumps = Vec::new();
        for diss in dissipators {
            if diss.rate == 0.0 {
                continue;
            }
            let cm = diss.op.matrix();
            h_eff -= (cm.adjoint() * cm) * Complex64::new(0.0, 0.5 * diss.rate);
            jumps.push((triplets(cm), diss.rate));
        }
        let drives = drives.iter().map(|t| (triplets(t.coupling.matrix()), t.drive)).collect();
        Self { h_eff: triplets(&h_eff), drives, jumps }
    }

    fn apply(&self, t: f64, rho: &CMatrix, out: &mut CMatrix, work: &mut Work) {
        let d = rho.nrows();
        let r = rho.as_slice();
        let tmp = work.tmp.as_mut_slice();
        tmp.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        sparse_mul_acc(&self.h_eff, r, tmp, d, c(1.0));
        for (m, env) in &self.drives {
            let e = env.field(t);
            if e != 0.0 {
                sparse_mul_acc(m, r, tmp, d, c(e));
            }
        }
        // out = K + K†, K = −i·tmp
        let o = out.as_mut_slice();
        for j in 0..d {
            for i in 0..d {
                let kij = tmp[i + d * j];
                let kji = tmp[j + d * i];
                o[i + d * j] = Complex64::new(kij.im + kji.im, kji.re - kij.re);
            }
        }
        for (cm, rate) in &self.jumps {
            for &(i, k, a) in cm {
                let a = a * *rate;
                for &(j, l, b) in cm {
                    o[i + d * j] += a * r[k + d * l] * b.conj();
                }
            }
        }
    }
}

/// out += s·A·ρ with A given as triplets and ρ, out column-major d×d.
fn sparse_mul_acc(a: &Triplets, rho: &[Complex64], out: &mut [Complex64], d: usize, s: Complex64) {
    for &(i, k, v) in a {
        let v = v * s;
        for col in 0..d {
            out[i + d * col] += v * rho[k + d * col];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{annihilation, embed, pauli_x, pauli_z};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qubit() -> HilbertSpace {
        HilbertSpace::single(2).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, space: &HilbertSpace) -> Operator {
        let d = space.dim();
        let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        Operator::new(space.clone(), (&a + a.adjoint()) * c(0.5)).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, space: &HilbertSpace) -> DensityMatrix {
        let d = space.dim();
        let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(space.clone(), m / tr).unwrap()
    }

    fn reference_rhs(rho: &CMatrix, h: &CMatrix, diss: &[Dissipator]) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        let mut out = (h * rho - rho * h) * (-i);
        for dsp in diss {
            let cm = dsp.op.matrix();
            let cd = cm.adjoint();
            let cdc = &cd * cm;
            out += (cm * rho * &cd - (&cdc * rho + rho * &cdc) * c(0.5)) * c(dsp.rate);
        }
        out
    }

    #[test]
    fn rhs_examples() {
        let s = qubit();
        let rho1 = DensityMatrix::basis(s.clone(), 1).unwrap();
        let zero = lindblad_rhs(&rho1, &Operator::zeros(&s), &[]).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));

        let gamma = 0.3;
        let diss = Dissipator::new(annihilation(2).unwrap(), gamma).unwrap();
        let d = lindblad_rhs(&rho1, &Operator::zeros(&s), &[diss]).unwrap();
        assert!((d[(0, 0)] - c(gamma)).norm() < 1e-15);
        assert!((d[(1, 1)] - c(-gamma)).norm() < 1e-15);
        assert!(d[(0, 1)].norm() < 1e-15 && d[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn rhs_rejects_bad_operands() {
        let s = qubit();
        let rho = DensityMatrix::basis(s.clone(), 0).unwrap();
        let nonherm = annihilation(2).unwrap();
        assert!(matches!(lindblad_rhs(&rho, &nonherm, &[]), Err(LindbladError::NotHermitian(_))));
        let other = Operator::zeros(&HilbertSpace::single(3).unwrap());
        assert!(matches!(lindblad_rhs(&rho, &other, &[]), Err(LindbladError::SpaceMismatch)));
        assert!(Dissipator::new(nonherm, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rhs_is_traceless_hermitian_and_matches_reference(seed in any::<u64>(), d in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let space = HilbertSpace::single(d).unwrap();
            let rho = random_state(&mut rng, &space);
            let h = random_hermitian(&mut rng, &space);
            let diss: Vec<Dissipator> = (0..2).map(|_| {
                let m = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                Dissipator::new(Operator::new(space.clone(), m).unwrap(), rng.gen_range(0.0..2.0)).unwrap()
            }).collect();
            let out = lindblad_rhs(&rho, &h, &diss).unwrap();
            prop_assert!(out.trace().norm() < 1e-12);
            let herm = (&out - out.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            prop_assert!(herm < 1e-12);
            let reference = reference_rhs(rho.matrix(), h.matrix(), &diss);
            prop_assert!((&out - reference).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn unitary_evolution_keeps_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        let h = random_hermitian(&mut rng, &space);
        let psi: Vec<Complex64> = (0..6).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let rho0 = DensityMatrix::pure(space, &psi).unwrap();
        let dt = 0.25 * step_limit(&h, &[]);
        let spec = PropagationSpec::new(0.0, 200.0, dt, 10).observe(Observable::custom("purity", |r| r.purity()));
        let ts = propagate(&rho0, &h, &[], &[], &spec).unwrap();
        for p in ts.get("purity").unwrap() {
            assert!((p - 1.0).abs() < 1e-7, "purity {p}");
        }
        assert!(ts.max_trace_drift < 1e-7);
        assert!(ts.max_hermiticity_error < 1e-9);
    }

    #[test]
    fn resonant_rabi_matches_analytic() {
        let omega_r = 0.05;
        let h = pauli_x().scale(0.5 * omega_r);
        let rho0 = DensityMatrix::basis(qubit(), 0).unwrap();
        let excited = Operator::transition(2, 1, 1).unwrap();
        let spec = PropagationSpec::new(0.0, 300.0, 0.5, 4).observe(Observable::expectation("p1", excited));
        let ts = propagate(&rho0, &h, &[], &[], &spec).unwrap();
        for (t, p) in ts.times.iter().zip(ts.get("p1").unwrap()) {
            let exact = (0.5 * omega_r * t).sin().powi(2);
            assert!((p - exact).abs() < 1e-6, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn decay_matches_exponential() {
        let gamma = 0.02;
        let s = qubit();
        let rho0 = DensityMatrix::basis(s.clone(), 1).unwrap();
        let diss = Dissipator::new(annihilation(2).unwrap(), gamma).unwrap();
        let spec = PropagationSpec::new(0.0, 200.0, 0.5, 8)
            .observe(Observable::expectation("p1", Operator::transition(2, 1, 1).unwrap()));
        let ts = propagate(&rho0, &Operator::zeros(&s), &[], &[diss], &spec).unwrap();
        for (t, p) in ts.times.iter().zip(ts.get("p1").unwrap()) {
            assert!((p - (-gamma * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn step_halving_converges() {
        // driven, damped qutrit in the lab frame
        let space = HilbertSpace::single(3).unwrap();
        let h0 = Operator::from_real(space.clone(), &[&[0.0, 0.0, 0.0], &[0.0, 0.3, 0.0], &[0.0, 0.0, 0.55]]).unwrap();
        let h1 = Operator::from_real(space.clone(), &[&[0.0, 0.02, 0.0], &[0.02, 0.0, 0.01], &[0.0, 0.01, 0.0]]).unwrap();
        let drive = DriveEnvelope::gaussian(1.0, 0.3, 100.0, 200.0).unwrap();
        let terms = [DriveTerm { coupling: h1, drive }];
        let diss = [Dissipator::new(Operator::new(space.clone(), annihilation(3).unwrap().into_matrix()).unwrap(), 1e-3).unwrap()];
        let rho0 = DensityMatrix::basis(space.clone(), 0).unwrap();
        let run = |dt: f64, stride: usize| {
            let mut spec = PropagationSpec::new(0.0, 400.0, dt, stride);
            for k in 0..3 {
                spec = spec.observe(Observable::expectation(format!("p{k}"), Operator::new(space.clone(), {
                    let mut m = CMatrix::zeros(3, 3);
                    m[(k, k)] = c(1.0);
                    m
                }).unwrap()));
            }
            propagate(&rho0, &h0, &terms, &diss, &spec).unwrap()
        };
        let coarse = run(0.4, 10);
        let fine = run(0.2, 20);
        assert_eq!(coarse.times.len(), fine.times.len());
        for name in ["p0", "p1", "p2"] {
            for (a, b) in coarse.get(name).unwrap().iter().zip(fine.get(name).unwrap()) {
                assert!((a - b).abs() < 1e-5, "{name}: {a} vs {b}");
            }
        }
        assert!(coarse.last("p1").unwrap() > 0.01);
    }

    #[test]
    fn step_guard_refuses_coarse_steps() {
        let s = qubit();
        let h = pauli_z().scale(0.5);
        let rho0 = DensityMatrix::basis(s.clone(), 0).unwrap();
        let err = propagate(&rho0, &h, &[], &[], &PropagationSpec::new(0.0, 10.0, 1.0, 1)).unwrap_err();
        assert!(matches!(err, LindbladError::StepTooLarge { .. }));
        let drive = DriveEnvelope::gaussian(1.0, 1.0, 10.0, 0.0).unwrap();
        let terms = [DriveTerm { coupling: pauli_x(), drive }];
        let limit = drive.period() / 40.0;
        let err = propagate(&rho0, &h, &terms, &[], &PropagationSpec::new(0.0, 10.0, 1.01 * limit, 1)).unwrap_err();
        assert!(matches!(err, LindbladError::StepTooLarge { .. }));
    }

    #[test]
    fn guard_aborts_unstable_integration() {
        // a huge decay rate makes RK4 blow up at a step the Hamiltonian guard allows
        let s = qubit();
        let h = pauli_z().scale(1e-3);
        let rho0 = DensityMatrix::basis(s.clone(), 1).unwrap();
        let diss = Dissipator::new(annihilation(2).unwrap(), 50.0).unwrap();
        let err = propagate(&rho0, &h, &[], &[diss], &PropagationSpec::new(0.0, 20.0, 1.0, 1)).unwrap_err();
        assert!(matches!(err, LindbladError::GuardAbort { .. }), "{err:?}");
    }

    #[test]
    fn envelope_fwhm_of_intensity() {
        let env = DriveEnvelope::gaussian(1.0, 0.0, 100.0, 0.0).unwrap();
        let g2 = |t: f64| env.envelope(t).powi(2);
        assert!((g2(50.0) - 0.5).abs() < 1e-12);
        assert!((g2(-50.0) - 0.5).abs() < 1e-12);
        assert_eq!(env.envelope(0.0), 1.0);
    }

    #[test]
    fn output_times_are_increasing_and_aligned() {
        let s = qubit();
        let h = pauli_z().scale(0.01);
        let rho0 = DensityMatrix::basis(s.clone(), 0).unwrap();
        let spec = PropagationSpec::new(0.0, 10.0, 0.3, 3).observe(Observable::expectation("z", pauli_z())).with_states();
        let ts = propagate(&rho0, &h, &[], &[], &spec).unwrap();
        assert!(ts.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.times.last().unwrap(), 10.0);
        assert_eq!(ts.states.as_ref().unwrap().len(), ts.len());
        assert_eq!(ts.get("z").unwrap().len(), ts.len());
    }

    #[test]
    fn embedded_collapse_on_composite_space() {
        let space = HilbertSpace::new(vec![2, 2]).unwrap();
        let a0 = embed(&annihilation(2).unwrap(), 0, &space).unwrap();
        let rho0 = DensityMatrix::product_basis(space.clone(), &[1, 1]).unwrap();
        let diss = Dissipator::new(a0, 0.1).unwrap();
        let spec = PropagationSpec::new(0.0, 20.0, 0.1, 50).with_states();
        let ts = propagate(&rho0, &Operator::zeros(&space), &[], &[diss], &spec).unwrap();
        let last = ts.final_state().unwrap();
        assert!((last.population(space.index(&[0, 1])) - (1.0 - (-2.0f64).exp())).abs() < 1e-8);
        assert_eq!(last.population(space.index(&[1, 0])), 0.0);
    }
}
