//! Classical and quantum polarimetry.
//!
//! Conventions: circular Jones basis (a = R, b = L), σ₃ = diag(1, −1) and the
//! halved Stokes normalization S_μ = ½A†σ_μA. Quantum Stokes operators follow
//! the same normalization, so Ŝ₃ = (â†â − b̂†b̂)/2.

pub mod channels;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod fock;
pub mod gadget;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mueller;
pub mod parallel;
pub mod stokes;

pub use error::{Error, Result};
