//! Electron bubbles in condensed helium-4: an orbital-free density functional
//! for the bubble and its levels, and a Lindblad propagator for the optics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dft;
pub mod lindblad;
pub mod scenarios;
pub mod units;
