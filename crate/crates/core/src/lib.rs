//! Asymptotic secret key rates for coherent-state CV-QKD with square QAM
//! constellations, optionally shaped with a Maxwell–Boltzmann distribution.
//!
//! The protocol model is homodyne detection, reverse reconciliation and
//! collective attacks over a linear quantum channel. Eve's Holevo
//! information is bounded by the Gaussian state sharing the covariance
//! matrix of the discrete-modulation state; the off-diagonal term of that
//! matrix is evaluated exactly in a truncated Fock basis.
//!
//! Layout:
//!
//! - [`constellation`]: uniform and MB-shaped PAM/QAM alphabets at fixed mean photon number.
//! - [`channel`]: fiber transmittance and noise variances (shot-noise units).
//! - [`classical_mi`]: Alice–Bob mutual information for one homodyne quadrature.
//! - [`fock`]: average modulation state, its square root, and the correlation term.
//! - [`holevo`]: two-mode covariance matrix, symplectic spectrum, Holevo bound.
//! - [`skr`]: Devetak–Winter rate, shaping/power optimizers, noise tolerance.
//!
//! All variances are in shot-noise units (vacuum quadrature variance 1).

#![forbid(unsafe_code)]
// `!(x >= 0.0)` is the intended spelling: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod classical_mi;
pub mod constellation;
mod error;
pub mod fock;
pub mod holevo;
pub mod optimize;
pub mod quadrature;
pub mod skr;

pub use channel::ChannelParams;
pub use constellation::{build_constellation, Constellation, PamAlphabet, Shaping};
pub use error::{Error, Result};
pub use holevo::{HolevoBreakdown, TwoModeCovariance};

pub use skr::{
    Modulation, OptimizerConfig, OptimumRecord, PowerCorridor, ProtocolSpec, QamShaping, SkrEngine, SkrReport,
};
