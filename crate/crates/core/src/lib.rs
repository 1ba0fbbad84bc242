//! Symbol-level system simulator for dynamic-TDD 5G deployments in indoor
//! factory halls.
//!
//! The crate is organised along the data path of one simulation run:
//!
//! - [`config`] / [`topology`]: experiment parameters and the hall layout.
//! - [`channel`] / [`phy`]: link gains, SINR and the SINR-to-BLER abstraction.
//! - [`traffic`]: FTP3 (Poisson) and CBR arrivals, per-UE transmit buffers.
//! - [`tdd`]: buffered-traffic-ratio frame selection with QoS biasing.
//! - [`mac`]: UL power control, configured-grant UL, DL schedulers, HARQ.
//! - [`engine`]: the discrete-event loop advancing one OFDM symbol at a time.
//! - [`metrics`]: latency quantiles, CCDF/ECDF, outage latency, reports.
//! - [`runner`]: single runs and parameter sweeps with file output.
//!
//! ```no_run
//! use tddsim::{config::SimConfig, engine::run};
//!
//! let mut cfg = SimConfig::default();
//! cfg.sim.horizon_frames = 200;
//! let out = run(&cfg, 1).unwrap();
//! println!("{}", out.report.summary_line());
//! ```

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod mac;
pub mod metrics;
pub mod phy;
pub mod runner;
pub mod tdd;
pub mod topology;
pub mod traffic;

pub use config::SimConfig;
pub use error::{ConfigError, SimError};

/// Link direction of a transmission or TTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        }
    }
}

/// Service class of a UE and its packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Service {
    Urllc,
    Embb,
}

impl Service {
    pub fn as_str(self) -> &'static str {
        match self {
            Service::Urllc => "urllc",
            Service::Embb => "embb",
        }
    }
}

/// Converts dBm (or dB) to linear milliwatts (or a linear ratio).
#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts linear milliwatts (or a ratio) to dBm (or dB).
#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}
