//! Dense Lindblad master-equation propagation over small composite spaces.
//!
//! Hamiltonians are angular frequencies (rad/fs, ħ = 1), rates are 1/fs and
//! drive fields are V/nm.

mod master;
mod operator;
mod state;

use thiserror::Error;

pub use master::{
    lindblad_rhs, propagate, step_limit, Dissipator, DriveEnvelope, DriveTerm, Observable, PropagationSpec,
    TimeSeries,
};
pub use operator::{
    annihilation, embed, kron, pauli_x, pauli_y, pauli_z, CMatrix, HilbertSpace, Operator, MAX_DIM,
};
pub use state::{concurrence, partial_trace, DensityMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),
    #[error("factor index {0} out of range")]
    InvalidFactor(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("operator is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("dissipation rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("invalid propagation spec: {0}")]
    InvalidSpec(String),
    #[error("time step {dt} fs exceeds the stability guard {limit} fs")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error(
        "integrator guard tripped at t = {time_fs} fs (trace drift {trace_drift:e}, min eigenvalue {min_eigenvalue:e}); {advice}"
    )]
    GuardAbort { time_fs: f64, trace_drift: f64, min_eigenvalue: f64, advice: String },
}
