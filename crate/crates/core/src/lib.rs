//! Gaussian phase-space machinery for a damped particle in a noisy
//! environment: when does dissipative evolution break entanglement for
//! good?
//!
//! The crate covers two questions. For a single free particle with damping
//! and diffusion, it evaluates the complete-disentanglement criterion — the
//! evolved P function stays nonnegative once the propagator's noise kernel
//! exceeds a minimum-uncertainty offset — and solves for the crossing time.
//! For two harmonically coupled particles it builds the rotated-frame
//! sector dynamics and certifies, via a smearing split of the propagator
//! checked by the Duan variance criterion (with a Simon PPT oracle on the
//! side), that all initial states separate after a finite time.
//!
//! Everything works in ħ = 1 units with (q, p) ordering per mode.

pub mod disentangle_single;
pub mod dynamics_coupled;
pub mod dynamics_single;
mod numerics;
pub mod phase_space;
pub mod sampling;
pub mod separability;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("unsupported number of modes: {0} (expected 1 or 2)")]
    UnsupportedModes(usize),

    #[error("{0} must be positive (got {1})")]
    NonPositive(&'static str, f64),

    #[error("{0} must be nonnegative and finite (got {1})")]
    Negative(&'static str, f64),

    #[error("time must be nonnegative (got {0})")]
    NegativeTime(f64),

    #[error("covariance is not a valid Wigner covariance")]
    WignerInvalid,

    #[error("singular matrix: {0}")]
    SingularMatrix(&'static str),

    #[error("quadrature failed to converge within the refinement cap")]
    QuadratureDivergence,

    #[error("criterion solver found no crossing")]
    NoCrossing,

    #[error("free-particle criterion requires omega = 0 (got {0})")]
    NonFreeParams(f64),

    #[error("closed-form sector noise requires d_qp = 0 (got {0})")]
    OffDiagonalDiffusion(f64),

    #[error("sector is not underdamped (omega = {omega}, gamma = {gamma})")]
    Overdamped { omega: f64, gamma: f64 },

    #[error("smearing matrix must be PSD with det = 1/4 (det = {0})")]
    SmearingInvalid(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use dynamics_single::{DiffusionMatrix, FlowVariant, Propagator, SystemParams};
pub use phase_space::{GaussianState1, GaussianState2};
