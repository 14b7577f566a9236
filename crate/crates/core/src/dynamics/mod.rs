//! Time stepping for `i u_t + Delta u = (K*|u|^2) u - |u|^{2/d} u`.

mod config;
mod physics;
mod run;

pub use config::*;
pub use physics::*;
pub use run::*;
