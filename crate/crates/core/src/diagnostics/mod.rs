//! Late-time diagnostics on snapshots: profile, bootstrap norms, the phase
//! correction, the profile-equation terms, scattering data and decay fits.

mod fit;
mod phase;
mod pipeline;
mod profile;
mod residual;
mod scattering;

pub use fit::{decay_fit, DecayFit};
pub use phase::{corrected_profile, integrating_factor, PhaseAccumulator};
pub use pipeline::{dyadic_times, DiagnosticsConfig, DiagnosticsOutput, DiagnosticsPipeline, DiagnosticsRecord};
pub use profile::{
    bootstrap_norms, profile, unprofile, BootstrapNorms, FrequencyConvolver, PhasePotential, ProfileSnapshot,
};
pub use residual::{profile_ode_residual, rhs_terms, ResidualReport, RhsContext, RhsNorms, RhsTerms};
pub use scattering::{
    asymptotic_field, asymptotic_table, dyadic_differences, extract_w, AsymptoticRow, ConvergenceRow, DyadicRow,
    ProfileSample, ScatteringReport,
};
