//! Gaussian states, symplectic gates, homodyne conditioning and overlaps.

mod fidelity;
mod gate;
mod homodyne;
mod state;

pub use fidelity::overlap_fidelity;
pub use gate::{symplectic_form, SymplecticGate};
pub use homodyne::{homodyne, Quadrature, Readout};
pub use state::{db_to_r, GaussianState, SqueezeAxis, IDEAL_R, VACUUM_VARIANCE};
