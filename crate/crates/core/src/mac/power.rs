//! Open-loop UL power control.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerControlConfig {
    /// Target received power per PRB.
    pub p0_dbm: f64,
    /// Fractional pathloss compensation.
    pub alpha: f64,
    pub sigma_max_dbm: f64,
    /// Power step applied to each HARQ retransmission.
    pub retx_boost_db: f64,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        PowerControlConfig {
            p0_dbm: -61.0,
            alpha: 1.0,
            sigma_max_dbm: 23.0,
            retx_boost_db: 3.0,
        }
    }
}

/// Total transmit power `min(Σ_max, P0 + 10·log10(prbs) + α·pathloss)`.
pub fn ul_tx_power(pc: &PowerControlConfig, prbs: u32, pathloss_db: f64) -> f64 {
    debug_assert!(prbs >= 1);
    let open_loop = pc.p0_dbm + 10.0 * (prbs as f64).log10() + pc.alpha * pathloss_db;
    open_loop.min(pc.sigma_max_dbm)
}

/// Power of the next retransmission: the previous attempt plus the boost,
/// re-clamped to `Σ_max`. Boosts accumulate across attempts.
pub fn retx_power(pc: &PowerControlConfig, previous_dbm: f64) -> f64 {
    (previous_dbm + pc.retx_boost_db).min(pc.sigma_max_dbm)
}
