//! Closed-form performance metrics of opportunistic content delivery.

pub mod activation;
pub mod coverage;
pub mod scdp;
pub mod selection;

pub use activation::{active_densities, activation_table, ActivationTable, DensityReport};
pub use coverage::{assoc_distance_pdf, cache_hit, conditional_active_density, coverage, coverage_baseline, InterferenceKernel};
pub use scdp::{project, scdp, scdp_gradient, AnalyticalReport, GradientMode, ScdpModel};
pub use selection::{osa_probability, zeta_mrfs, zeta_rfs};
