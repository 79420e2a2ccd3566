//! Two-mode bosonic Fock space truncated at a maximum photon number.

pub mod analysis;
pub mod basis;
pub mod constructors;
pub mod majorana;
pub mod measurements;
pub mod moments;
pub mod operators;
pub mod partial_trace;
pub mod random;
pub mod rotation;
pub mod state;

pub use basis::FockBasis;
pub use moments::{dop, moments, stokes_vector, StokesMoments};
pub use operators::{build_stokes_operators, OperatorMatrix};
pub use state::{fidelity, FockState, StateKind};
