//! Slot-level Monte Carlo simulation of the delivery protocol on sampled
//! Poisson point processes.

mod estimate;
mod monte_carlo;
mod profile;
mod realization;
mod slot;

pub use estimate::{mean_estimate, ratio_estimate, weighted_sum, SimulationEstimate, Z95};
pub use monte_carlo::{monte_carlo, reduce, AccessMode, MonteCarlo, MonteCarloReport, ReplicationRecord, SimulationConfig};
pub use profile::{radial_density_profile, RadialProfile};
pub use realization::{sample_network, sample_network_in, NetworkRealization, PointGrid, TYPICAL_ID};
pub use slot::{
    run_slot, select_candidate, sense_osa, sensing_radius, AccessRule, SlotContext, SlotOptions, SlotOutcome,
    TypicalParticipation,
};
