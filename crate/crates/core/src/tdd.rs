//! Dynamic TDD frame selection.
//!
//! At every frame boundary each BS turns the buffer observations of the
//! elapsed frame into the DL/UL pattern of the next one:
//!
//! 1. [`qos_filter`] picks which buffered traffic counts (URLLC only, or the
//!    URLLC+eMBB aggregate).
//! 2. [`buffered_ratio`] gives the per-slot DL share
//!    `μ = Z_dl / (Z_dl + Z_ul / ι)`, where `ι` is the first-transmission UL
//!    BLER and `Z_ul` the UL backlog visible at the BS.
//! 3. [`average_ratio`] averages the per-slot shares over the frame.
//! 4. [`build_frame`] rounds the average to a DL TTI count, spreads DL and UL
//!    TTIs evenly and places one guard symbol at every direction switch.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Direction;

/// Ratio used when a slot has no buffered traffic in either direction.
pub const NEUTRAL_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// URLLC buffers drive the selection whenever the cell serves URLLC.
    QosAware,
    /// URLLC and eMBB buffers are aggregated.
    QosUnaware,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::QosAware => "qos_aware",
            SelectionMode::QosUnaware => "qos_unaware",
        })
    }
}

/// Buffered bits seen by one BS at the end of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BufferObservation {
    /// 1-based slot index within the frame.
    pub slot_index: u32,
    pub z_dl_urllc: u64,
    pub z_dl_embb: u64,
    pub z_ul_urllc: u64,
    pub z_ul_embb: u64,
    /// Whether the cell has any URLLC UEs configured.
    pub urllc_configured: bool,
}

/// Returns the `(Z_dl, Z_ul)` pair that drives selection.
pub fn qos_filter(obs: &BufferObservation, mode: SelectionMode) -> (u64, u64) {
    match mode {
        SelectionMode::QosUnaware => (obs.z_dl_urllc + obs.z_dl_embb, obs.z_ul_urllc + obs.z_ul_embb),
        SelectionMode::QosAware if obs.urllc_configured => (obs.z_dl_urllc, obs.z_ul_urllc),
        SelectionMode::QosAware => (obs.z_dl_embb, obs.z_ul_embb),
    }
}

/// Relative buffered traffic ratio `z_dl / (z_dl + z_ul / iota)`.
///
/// Returns [`NEUTRAL_RATIO`] when both buffers are empty.
pub fn buffered_ratio(z_dl: f64, z_ul: f64, iota: f64) -> f64 {
    debug_assert!(iota > 0.0 && iota <= 1.0);
    if z_dl + z_ul <= 0.0 {
        return NEUTRAL_RATIO;
    }
    z_dl / (z_dl + z_ul / iota)
}

/// Frame average `(1/ξ) Σ μ(ς)`.
pub fn average_ratio(mus: &[f64], xi: usize) -> f64 {
    debug_assert_eq!(mus.len(), xi);
    if xi == 0 {
        return NEUTRAL_RATIO;
    }
    mus.iter().sum::<f64>() / xi as f64
}

/// Sliding window of first-transmission UL outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerEstimator {
    window: VecDeque<bool>,
    capacity: usize,
    failures: usize,
    iota_min: f64,
    iota: f64,
}

impl BlerEstimator {
    pub fn new(capacity: usize, iota_min: f64) -> Self {
        assert!(capacity > 0);
        BlerEstimator {
            window: VecDeque::with_capacity(capacity),
            capacity,
            failures: 0,
            iota_min,
            iota: 1.0,
        }
    }

    /// Pushes one outcome (`true` = decoding failed) and refreshes `ι`.
    pub fn update(&mut self, failed: bool) {
        if self.window.len() == self.capacity {
            if self.window.pop_front() == Some(true) {
                self.failures -= 1;
            }
        }
        self.window.push_back(failed);
        self.failures += failed as usize;
        self.iota = self.raw_fraction().clamp(self.iota_min, 1.0);
    }

    /// Current `ι`; 1 until the first outcome arrives.
    pub fn iota(&self) -> f64 {
        self.iota
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    fn raw_fraction(&self) -> f64 {
        self.failures as f64 / self.window.len() as f64
    }
}

/// Functional form of [`BlerEstimator::update`].
pub fn update_iota(mut est: BlerEstimator, failed: bool) -> BlerEstimator {
    est.update(failed);
    est
}

/// Per-cell `ι`: one window per UL UE, pooled over all windows.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBlerTracker {
    per_ue: Vec<BlerEstimator>,
    iota_min: f64,
}

impl CellBlerTracker {
    pub fn new(num_ues: usize, capacity: usize, iota_min: f64) -> Self {
        CellBlerTracker {
            per_ue: vec![BlerEstimator::new(capacity, iota_min); num_ues],
            iota_min,
        }
    }

    pub fn record(&mut self, local_ue: usize, failed: bool) {
        self.per_ue[local_ue].update(failed);
    }

    pub fn iota(&self) -> f64 {
        let (fails, total) = self
            .per_ue
            .iter()
            .fold((0, 0), |(f, n), e| (f + e.failures(), n + e.len()));
        if total == 0 {
            1.0
        } else {
            (fails as f64 / total as f64).clamp(self.iota_min, 1.0)
        }
    }
}

/// Frame dimensions and direction guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameShape {
    pub n_ttis: u32,
    pub tti_symbols: u32,
    pub min_dl: u32,
    pub min_ul: u32,
}

impl FrameShape {
    pub fn symbols(&self) -> u32 {
        self.n_ttis * self.tti_symbols
    }
}

/// DL/UL pattern of one radio frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub tti_directions: Vec<Direction>,
    /// Frame-relative symbol indices carrying a guard.
    pub guard_symbols: Vec<u32>,
    pub dl_fraction: f64,
    pub tti_symbols: u32,
    /// The averaged ratio that produced this frame.
    pub mu_bar: f64,
}

impl FrameConfig {
    pub fn n_ttis(&self) -> usize {
        self.tti_directions.len()
    }

    pub fn direction(&self, tti: usize) -> Direction {
        self.tti_directions[tti]
    }

    /// A TTI loses its last symbol to the guard when the next TTI (wrapping
    /// to the start of the frame) switches direction.
    pub fn has_guard(&self, tti: usize) -> bool {
        let n = self.tti_directions.len();
        self.tti_directions[tti] != self.tti_directions[(tti + 1) % n]
    }

    pub fn data_symbols(&self, tti: usize) -> u32 {
        self.tti_symbols - self.has_guard(tti) as u32
    }

    pub fn dl_ttis(&self) -> usize {
        self.tti_directions.iter().filter(|&&d| d == Direction::Dl).count()
    }

    pub fn pattern_string(&self) -> String {
        self.tti_directions
            .iter()
            .map(|d| match d {
                Direction::Dl => 'D',
                Direction::Ul => 'U',
            })
            .collect()
    }

    /// Checks guard placement, the DL fraction and the symbol budget.
    pub fn check(&self) -> Result<(), String> {
        let n = self.n_ttis();
        if n == 0 {
            return Err("empty frame".into());
        }
        let expected: Vec<u32> = (0..n)
            .filter(|&i| self.has_guard(i))
            .map(|i| ((i as u32 + 1) * self.tti_symbols) - 1)
            .collect();
        if expected != self.guard_symbols {
            return Err(format!("guards {:?} != switches {:?}", self.guard_symbols, expected));
        }
        let frac = self.dl_ttis() as f64 / n as f64;
        if frac != self.dl_fraction {
            return Err(format!("dl_fraction {} != {}", self.dl_fraction, frac));
        }
        let data: u32 = (0..n).map(|i| self.data_symbols(i)).sum();
        if data + self.guard_symbols.len() as u32 != n as u32 * self.tti_symbols {
            return Err("symbol budget mismatch".into());
        }
        Ok(())
    }
}

/// Builds the frame for an averaged DL share `mu_bar`.
///
/// TTI `i` is DL iff `⌈(i+1)·n_dl/n⌉ > ⌈i·n_dl/n⌉`, which spreads the DL TTIs
/// evenly, starts every mixed frame with DL and ends it with UL.
pub fn build_frame(mu_bar: f64, shape: &FrameShape) -> FrameConfig {
    let n = shape.n_ttis as u64;
    let lo = shape.min_dl.min(shape.n_ttis) as u64;
    let hi = n.saturating_sub(shape.min_ul as u64).max(lo);
    let n_dl = ((mu_bar.clamp(0.0, 1.0) * n as f64).round() as u64).clamp(lo, hi);
    let ceil_div = |a: u64| a.div_ceil(n);
    let tti_directions: Vec<Direction> = (0..n)
        .map(|i| {
            if ceil_div((i + 1) * n_dl) > ceil_div(i * n_dl) {
                Direction::Dl
            } else {
                Direction::Ul
            }
        })
        .collect();
    let mut frame = FrameConfig {
        tti_directions,
        guard_symbols: Vec::new(),
        dl_fraction: n_dl as f64 / n as f64,
        tti_symbols: shape.tti_symbols,
        mu_bar,
    };
    frame.guard_symbols = (0..frame.n_ttis())
        .filter(|&i| frame.has_guard(i))
        .map(|i| (i as u32 + 1) * shape.tti_symbols - 1)
        .collect();
    frame
}

/// Runs the full pipeline over the slots of the elapsed frame.
pub fn select_frame(observations: &[BufferObservation], mode: SelectionMode, iota: f64, shape: &FrameShape) -> FrameConfig {
    let mus: Vec<f64> = observations
        .iter()
        .map(|o| {
            let (dl, ul) = qos_filter(o, mode);
            buffered_ratio(dl as f64, ul as f64, iota)
        })
        .collect();
    let mu_bar = if mus.is_empty() { NEUTRAL_RATIO } else { average_ratio(&mus, mus.len()) };
    build_frame(mu_bar, shape)
}

/// Extension point for alternative frame selection policies.
pub trait FrameSelector: Send {
    fn select(&mut self, bs: usize, observations: &[BufferObservation], iota: f64, shape: &FrameShape) -> FrameConfig;
}

/// The buffered-traffic-ratio policy.
#[derive(Debug, Clone, Copy)]
pub struct BufferRatioSelector {
    pub mode: SelectionMode,
}

impl FrameSelector for BufferRatioSelector {
    fn select(&mut self, _bs: usize, observations: &[BufferObservation], iota: f64, shape: &FrameShape) -> FrameConfig {
        select_frame(observations, self.mode, iota, shape)
    }
}

/// Static TDD: the same DL share every frame.
#[derive(Debug, Clone, Copy)]
pub struct FixedRatioSelector {
    pub mu_bar: f64,
}

impl FrameSelector for FixedRatioSelector {
    fn select(&mut self, _bs: usize, _observations: &[BufferObservation], _iota: f64, shape: &FrameShape) -> FrameConfig {
        build_frame(self.mu_bar, shape)
    }
}
