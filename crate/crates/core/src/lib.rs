//! Link-level simulator for cooperative downlink transmission from multiple
//! LEO satellites to handheld terminals under asynchronous OFDM reception.
//!
//! The pipeline per Monte Carlo drop is
//! [`geometry`] → [`channel`] → [`association`] → [`beamforming`] → [`link_eval`],
//! with [`ofdm`] supplying the timing-offset leakage model, [`analysis`] the
//! closed-form expectations, and [`experiment`] the campaign runner.

pub mod analysis;
pub mod association;
pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod link_eval;
pub mod ofdm;

pub mod consts {
    /// m/s
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Mean Earth radius, m
    pub const EARTH_RADIUS: f64 = 6_371_000.0;
}

pub use config::{AssociationMode, InterferenceMode, NoiseScope, ScenarioConfig, SyncMode, SyncSearch};
pub use error::{Result, SimError};
