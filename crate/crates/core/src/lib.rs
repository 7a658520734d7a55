//! Stochastic-geometry simulator and mean-field analytics for energy-efficient
//! ultra-dense cellular downlinks.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: Poisson deployments, nearest-BS association, Voronoi activity.
//! - [`channel`]: bounded path loss, sectorised antennas, Ornstein-Uhlenbeck fading.
//! - [`meanfield`]: closed-form mean-field interference and its diagnostics.
//! - [`ee`]: energy-efficiency closed form, Lambert-W power control, baselines.
//! - [`montecarlo`]: brute-force trial engine, trajectories and sweeps.
//!
//! Everything random takes an explicit RNG; parallel trial loops derive one
//! ChaCha stream per trial from a master seed so results do not depend on the
//! number of worker threads.

pub mod channel;
pub mod ee;
pub mod error;
pub mod geometry;
pub mod meanfield;
pub mod montecarlo;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_9;
