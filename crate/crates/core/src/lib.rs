//! Gaussian phase-space simulator for continuous-variable measurement-based quantum
//! computation on linear cluster states.
//!
//! States are tracked by their first and second moments in the convention
//! `a = x + i p`, `[x, p] = i/2`, so the vacuum has variance 1/4 per quadrature.
//! Quadratures are ordered per mode, `(x1, p1, x2, p2, ...)`.

pub mod cluster;
pub mod engine;
mod error;
pub mod experiment;
pub mod feedforward;
pub mod phase_space;
pub mod protocols;
pub mod verify;

pub use error::{Error, Result};
pub use phase_space::{
    db_to_r, homodyne, overlap_fidelity, GaussianState, Quadrature, Readout, SqueezeAxis, SymplecticGate, IDEAL_R,
    VACUUM_VARIANCE,
};
