//! Symbol clock and frame arithmetic.

use crate::config::{NetworkConfig, SYMBOLS_PER_SLOT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub symbol_index: u64,
    pub symbols_per_slot: u32,
    pub slots_per_frame: u32,
    pub tti_symbols: u32,
    pub symbol_duration_us: f64,
}

impl Clock {
    pub fn new(net: &NetworkConfig) -> Self {
        Clock {
            symbol_index: 0,
            symbols_per_slot: SYMBOLS_PER_SLOT,
            slots_per_frame: net.slots_per_frame(),
            tti_symbols: net.tti_symbols,
            symbol_duration_us: net.symbol_duration_s() * 1e6,
        }
    }

    pub fn symbols_per_frame(&self) -> u64 {
        (self.symbols_per_slot * self.slots_per_frame) as u64
    }

    pub fn frame_of(&self, symbol: u64) -> u64 {
        symbol / self.symbols_per_frame()
    }

    /// TTI index within the frame holding `symbol`.
    pub fn tti_in_frame(&self, symbol: u64) -> usize {
        ((symbol % self.symbols_per_frame()) / self.tti_symbols as u64) as usize
    }

    /// Global TTI counter.
    pub fn tti_index(&self, symbol: u64) -> u64 {
        symbol / self.tti_symbols as u64
    }

    pub fn seconds(&self, symbols: u64) -> f64 {
        symbols as f64 * self.symbol_duration_us * 1e-6
    }

    /// Symbol at which a packet arriving at `t_s` seconds becomes visible:
    /// the next symbol boundary.
    pub fn symbol_at(&self, t_s: f64) -> u64 {
        (t_s / (self.symbol_duration_us * 1e-6) - 1e-9).ceil().max(0.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_numerology() {
        let c = Clock::new(&NetworkConfig::default());
        assert_eq!(c.symbols_per_frame(), 280);
        assert!((c.symbol_duration_us - 1000.0 * 10.0 / 280.0).abs() < 1e-9);
        assert_eq!(c.tti_in_frame(281), 0);
        assert_eq!(c.tti_in_frame(279), 69);
        assert_eq!(c.frame_of(560), 2);
        assert_eq!(c.symbol_at(0.5e-3), 14);
        assert_eq!(c.symbol_at(1e-6), 1);
    }
}
