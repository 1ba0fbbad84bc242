//! Interferer sets and SINR for one TTI.
//!
//! All BSs share the TTI grid, so every transmission of a TTI overlaps every
//! other in time and only the PRB overlap matters. Interference is averaged
//! over the victim's PRBs: an interferer covering half of them counts with
//! half its per-PRB power.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::channel::LinkMatrix;
use crate::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InterfererKind {
    /// Other-cell transmitter in the victim's own direction.
    SameLinkInterCell,
    /// Other-cell BS transmitting DL into an UL reception.
    CrossLinkBsBs,
    /// Other-cell UE transmitting UL into a DL reception.
    CrossLinkUeUe,
    /// Another CG transmission of the same cell on overlapping PRBs.
    IntraCellCollision,
}

impl InterfererKind {
    pub fn is_cross_link(self) -> bool {
        matches!(self, InterfererKind::CrossLinkBsBs | InterfererKind::CrossLinkUeUe)
    }
}

/// A transmitter active in the current TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveTx {
    /// Node index in the link matrix.
    pub node: usize,
    pub cell: usize,
    pub direction: Direction,
    pub prbs: Range<u32>,
    /// Transmit power per PRB, linear mW.
    pub psd_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Index into the active transmitter list.
    pub tx: usize,
    pub kind: InterfererKind,
    pub overlap_prbs: u32,
}

pub fn overlap(a: &Range<u32>, b: &Range<u32>) -> u32 {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

/// Interferers of a reception in cell `rx_cell` and direction `rx_direction`
/// on `rx_prbs`. `desired` is the wanted transmitter, never listed.
///
/// DL receptions see other-cell BSs and other-cell UL UEs; UL receptions see
/// all other UL UEs (same cell = collision) and other-cell BSs.
pub fn cross_link_interferers(
    active: &[ActiveTx],
    desired: Option<usize>,
    rx_cell: usize,
    rx_direction: Direction,
    rx_prbs: &Range<u32>,
) -> Vec<Interferer> {
    let mut out = Vec::new();
    for (i, tx) in active.iter().enumerate() {
        if Some(i) == desired {
            continue;
        }
        let kind = match (rx_direction, tx.direction) {
            (_, Direction::Dl) if tx.cell == rx_cell => continue,
            (Direction::Dl, Direction::Dl) => InterfererKind::SameLinkInterCell,
            (Direction::Dl, Direction::Ul) if tx.cell == rx_cell => continue,
            (Direction::Dl, Direction::Ul) => InterfererKind::CrossLinkUeUe,
            (Direction::Ul, Direction::Dl) => InterfererKind::CrossLinkBsBs,
            (Direction::Ul, Direction::Ul) if tx.cell == rx_cell => InterfererKind::IntraCellCollision,
            (Direction::Ul, Direction::Ul) => InterfererKind::SameLinkInterCell,
        };
        let ov = overlap(&tx.prbs, rx_prbs);
        if ov > 0 {
            out.push(Interferer { tx: i, kind, overlap_prbs: ov });
        }
    }
    out
}

/// Linear gains and noise used by [`reception_sinr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrModel {
    pub desired_gain: f64,
    pub interference_gain: f64,
    /// Linear factor (≤ 1) applied to inter-cell interferers.
    pub irc_factor: f64,
    pub noise_ue_mw: f64,
    pub noise_bs_mw: f64,
}

/// Per-PRB linear SINR of a reception at `rx_node`.
pub fn reception_sinr(
    links: &LinkMatrix,
    active: &[ActiveTx],
    desired_node: usize,
    desired_psd_mw: f64,
    rx_node: usize,
    rx_direction: Direction,
    rx_prbs: &Range<u32>,
    interferers: &[Interferer],
    model: &SinrModel,
) -> f64 {
    let width = rx_prbs.len().max(1) as f64;
    let signal = desired_psd_mw * links.gain_lin(desired_node, rx_node) * model.desired_gain;
    let mut interference = 0.0;
    for i in interferers {
        let tx = &active[i.tx];
        debug_assert_ne!(tx.node, rx_node);
        let suppress = if i.kind == InterfererKind::IntraCellCollision { 1.0 } else { model.irc_factor };
        interference += tx.psd_mw * links.gain_lin(tx.node, rx_node) * model.interference_gain * suppress
            * (i.overlap_prbs as f64 / width);
    }
    let noise = match rx_direction {
        Direction::Dl => model.noise_ue_mw,
        Direction::Ul => model.noise_bs_mw,
    };
    signal / (noise + interference)
}
