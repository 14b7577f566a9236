//! Pseudo-spectral simulation and diagnostics for a Schrodinger equation with
//! a screened-Coulomb (Bopp-Podolsky) Hartree term and a critical local power.

pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod par;
pub mod spectral;

pub use error::{Result, SbpError};
pub use field::{ComplexField, RealField, Space};
pub use grid::GridSpec;
pub mod interp;
pub mod snapshot;
pub mod kernel;
pub mod propagator;
pub mod verify;
pub mod dynamics;
pub mod diagnostics;
