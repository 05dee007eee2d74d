//! Analytics, Monte Carlo simulation and caching optimization for
//! opportunistic content delivery in cache-enabled D2D networks.
//!
//! The crate is `no_std` with `alloc`; file formats, configuration and the
//! command line live in the `fogcache` crate.

#![no_std]

extern crate alloc;

pub mod analytics;
pub mod content;
mod error;
pub mod math;
pub mod network;
pub mod optimizer;
pub mod quadrature;
pub mod simulator;

pub use content::{CachingPolicy, CombinationSet, ContentParams, Popularity, Scheme};
pub use error::{Error, Result};
pub use network::NetworkParams;
pub use quadrature::QuadratureConfig;
