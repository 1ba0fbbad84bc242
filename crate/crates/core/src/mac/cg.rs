//! Configured-grant UL transmissions.
//!
//! A UE with a prepared packet sends it whole in the next UL TTI on a
//! uniformly drawn sub-band at a fixed MCS. No scheduling request is made,
//! so two UEs of one cell may pick the same sub-band and collide.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::MacConfig;
use crate::mac::power::{ul_tx_power, PowerControlConfig};
use crate::phy::McsTable;
use crate::traffic::PacketId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgConfig {
    pub mcs: usize,
    pub subband_count: u32,
    pub subband_prbs: u32,
}

impl CgConfig {
    pub fn from_mac(mac: &MacConfig) -> Self {
        CgConfig {
            mcs: mac.cg_mcs,
            subband_count: mac.cg_subbands,
            subband_prbs: mac.cg_subband_prbs,
        }
    }

    /// Share of the CG region covered by one sub-band.
    pub fn subband_fraction(&self) -> f64 {
        1.0 / self.subband_count as f64
    }

    /// PRBs of sub-band `idx`; sub-bands tile the carrier from PRB 0.
    pub fn subband_range(&self, idx: u32) -> Range<u32> {
        debug_assert!(idx < self.subband_count);
        idx * self.subband_prbs..(idx + 1) * self.subband_prbs
    }

    /// Bits one sub-band carries over `data_symbols` symbols.
    pub fn capacity_bits(&self, data_symbols: u32, re_overhead: f64, table: &McsTable) -> u32 {
        self.subband_prbs * table.bits_per_prb(self.mcs, data_symbols, re_overhead)
    }

    pub fn pick_subband<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.random_range(0..self.subband_count)
    }
}

/// One CG transmission as it goes on the air.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgTransmission {
    pub ue: usize,
    pub packet: PacketId,
    pub bits: u32,
    pub subband: u32,
    pub prbs: Range<u32>,
    pub mcs: usize,
    pub power_dbm: f64,
}

/// Builds the first CG transmission of `packet`, or `None` if the packet
/// does not fit a sub-band in a TTI with `data_symbols` data symbols.
#[allow(clippy::too_many_arguments)]
pub fn cg_transmit<R: Rng + ?Sized>(
    cg: &CgConfig,
    pc: &PowerControlConfig,
    table: &McsTable,
    re_overhead: f64,
    data_symbols: u32,
    ue: usize,
    packet: PacketId,
    bits: u32,
    pathloss_db: f64,
    rng: &mut R,
) -> Option<CgTransmission> {
    if bits > cg.capacity_bits(data_symbols, re_overhead, table) {
        return None;
    }
    let subband = cg.pick_subband(rng);
    Some(CgTransmission {
        ue,
        packet,
        bits,
        subband,
        prbs: cg.subband_range(subband),
        mcs: cg.mcs,
        power_dbm: ul_tx_power(pc, cg.subband_prbs, pathloss_db),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cg() -> CgConfig {
        CgConfig::from_mac(&MacConfig::default())
    }

    #[test]
    fn subbands_tile_a_quarter_each() {
        let cg = cg();
        assert_eq!(cg.subband_fraction() * cg.subband_count as f64, 1.0);
        assert_eq!(cg.subband_range(0), 0..12);
        assert_eq!(cg.subband_range(3), 36..48);
    }

    #[test]
    fn urllc_packet_fits_even_with_a_guard() {
        let t = McsTable::default();
        // 12 PRB x floor(12 x 3 x 0.75 x 1) bits
        assert_eq!(cg().capacity_bits(3, 0.25, &t), 324);
        assert_eq!(cg().capacity_bits(4, 0.25, &t), 432);
    }

    #[test]
    fn transmission_uses_full_subband_power() {
        let pc = PowerControlConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tx = cg_transmit(&cg(), &pc, &McsTable::default(), 0.25, 4, 7, 1, 256, 60.0, &mut rng).unwrap();
        assert_eq!(tx.prbs.len(), 12);
        assert!((tx.power_dbm - ul_tx_power(&pc, 12, 60.0)).abs() < 1e-12);
        assert!(cg_transmit(&cg(), &pc, &McsTable::default(), 0.25, 4, 7, 1, 5000, 60.0, &mut rng).is_none());
    }

    #[test]
    fn subband_draw_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            counts[cg().pick_subband(&mut rng) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }
}
