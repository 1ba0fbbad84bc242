//! Experiment configuration.
//!
//! A configuration is a TOML document with one table per subsystem. Every key
//! is optional; an empty file yields the indoor-factory defaults (18 cells,
//! 20 MHz at 30 kHz SCS, 3.5 GHz, 4-symbol TTIs, FTP3 URLLC at 50 pkt/s).
//! Dotted `key=value` overrides are applied to the TOML tree before it is
//! deserialized, so anything that can be written in the file can also be
//! patched from the command line. See `docs/config.md` for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PathlossParams;
use crate::error::ConfigError;
use crate::mac::power::PowerControlConfig;
use crate::mac::scheduler::SchedulerKind;
use crate::tdd::SelectionMode;

/// Symbols per slot for the normal cyclic prefix.
pub const SYMBOLS_PER_SLOT: u32 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_cells: usize,
    pub bs_antennas: u32,
    pub ue_antennas: u32,
    pub carrier_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    pub scs_khz: u32,
    /// Usable PRBs on the carrier (51 for 20 MHz at 30 kHz).
    pub prbs: u32,
    pub tti_symbols: u32,
    pub frame_ms: f64,
    pub bs_power_dbm: f64,
    pub ue_max_power_dbm: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub hall_length_m: f64,
    pub hall_width_m: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub ue_drop: UeDrop,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            num_cells: 18,
            bs_antennas: 4,
            ue_antennas: 4,
            carrier_freq_ghz: 3.5,
            bandwidth_mhz: 20.0,
            scs_khz: 30,
            prbs: 51,
            tti_symbols: 4,
            frame_ms: 10.0,
            bs_power_dbm: 30.0,
            ue_max_power_dbm: 23.0,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            hall_length_m: 120.0,
            hall_width_m: 60.0,
            grid_rows: 3,
            grid_cols: 6,
            ue_drop: UeDrop::Patch,
        }
    }
}

/// How UEs are dropped and associated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeDrop {
    /// Uniform over the serving BS's rectangular patch of the hall.
    Patch,
    /// Uniform over the whole hall, associated to the strongest mean link.
    Hall,
}

impl NetworkConfig {
    pub fn slots_per_frame(&self) -> u32 {
        // 1 ms holds scs/15 slots.
        ((self.frame_ms * self.scs_khz as f64 / 15.0).round()) as u32
    }

    pub fn symbols_per_frame(&self) -> u32 {
        self.slots_per_frame() * SYMBOLS_PER_SLOT
    }

    pub fn ttis_per_frame(&self) -> u32 {
        self.symbols_per_frame() / self.tti_symbols
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.frame_ms * 1e-3 / self.symbols_per_frame() as f64
    }

    pub fn tti_duration_s(&self) -> f64 {
        self.symbol_duration_s() * self.tti_symbols as f64
    }

    pub fn prb_bandwidth_hz(&self) -> f64 {
        12.0 * self.scs_khz as f64 * 1e3
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.num_cells == 0 {
            return Err(ConfigError::invalid("network.num_cells", "must be at least 1"));
        }
        if self.grid_rows * self.grid_cols != self.num_cells {
            return Err(ConfigError::invalid(
                "network.grid_rows",
                format!(
                    "grid mismatch: {}x{} = {} != num_cells {}",
                    self.grid_rows,
                    self.grid_cols,
                    self.grid_rows * self.grid_cols,
                    self.num_cells
                ),
            ));
        }
        if ![15, 30, 60, 120].contains(&self.scs_khz) {
            return Err(ConfigError::invalid("network.scs_khz", "must be one of 15, 30, 60, 120"));
        }
        if !(self.frame_ms > 0.0) || !self.frame_ms.is_finite() {
            return Err(ConfigError::invalid("network.frame_ms", "must be positive"));
        }
        let slots = self.frame_ms * self.scs_khz as f64 / 15.0;
        if (slots - slots.round()).abs() > 1e-9 || slots < 1.0 {
            return Err(ConfigError::invalid("network.frame_ms", "must hold a whole number of slots"));
        }
        if self.tti_symbols == 0 || self.symbols_per_frame() % self.tti_symbols != 0 {
            return Err(ConfigError::invalid(
                "network.tti_symbols",
                format!("must divide the {} symbols of a frame", self.symbols_per_frame()),
            ));
        }
        if self.tti_symbols < 2 {
            return Err(ConfigError::invalid("network.tti_symbols", "needs room for a guard symbol"));
        }
        for (field, v) in [
            ("network.bs_power_dbm", self.bs_power_dbm),
            ("network.ue_max_power_dbm", self.ue_max_power_dbm),
            ("network.carrier_freq_ghz", self.carrier_freq_ghz),
            ("network.bandwidth_mhz", self.bandwidth_mhz),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(field, "must be finite"));
            }
        }
        if self.carrier_freq_ghz <= 0.0 {
            return Err(ConfigError::invalid("network.carrier_freq_ghz", "must be positive"));
        }
        if self.prbs == 0 {
            return Err(ConfigError::invalid("network.prbs", "must be positive"));
        }
        if self.bs_antennas == 0 || self.ue_antennas == 0 {
            return Err(ConfigError::invalid("network.bs_antennas", "antenna counts must be positive"));
        }
        if !(self.hall_length_m > 0.0 && self.hall_width_m > 0.0) {
            return Err(ConfigError::invalid("network.hall_length_m", "hall dimensions must be positive"));
        }
        if !(self.bs_height_m > 0.0 && self.ue_height_m > 0.0) {
            return Err(ConfigError::invalid("network.bs_height_m", "antenna heights must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// DL UEs per cell; the first `k_embb_dl` of them carry eMBB instead of URLLC.
    pub k_dl: usize,
    pub k_ul: usize,
    pub k_embb_dl: usize,
    pub urllc_pkt_dl_bits: u32,
    pub urllc_pkt_ul_bits: u32,
    pub lambda_dl: f64,
    pub lambda_ul: f64,
    pub embb_pkt_bits: u32,
    pub embb_rate_bps: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            k_dl: 8,
            k_ul: 8,
            k_embb_dl: 0,
            urllc_pkt_dl_bits: 256,
            urllc_pkt_ul_bits: 256,
            lambda_dl: 50.0,
            lambda_ul: 50.0,
            embb_pkt_bits: 16_000,
            embb_rate_bps: 500_000.0,
        }
    }
}

impl TrafficConfig {
    pub fn k_urllc_dl(&self) -> usize {
        self.k_dl - self.k_embb_dl
    }

    pub fn ues_per_cell(&self) -> usize {
        self.k_dl + self.k_ul
    }

    /// Offered URLLC load per cell as (DL, UL, total) in bits/s.
    pub fn urllc_offered_load(&self) -> (f64, f64, f64) {
        let dl = offered_load(self.k_urllc_dl(), self.urllc_pkt_dl_bits, self.lambda_dl);
        let ul = offered_load(self.k_ul, self.urllc_pkt_ul_bits, self.lambda_ul);
        (dl, ul, dl + ul)
    }

    /// Sets `lambda_dl == lambda_ul` so the total URLLC load per cell equals
    /// `omega_bps`, keeping the UE counts fixed.
    pub fn scale_to_offered_load(&mut self, omega_bps: f64) {
        let bits_per_unit_rate = self.k_urllc_dl() as f64 * self.urllc_pkt_dl_bits as f64
            + self.k_ul as f64 * self.urllc_pkt_ul_bits as f64;
        let lambda = if bits_per_unit_rate > 0.0 { omega_bps / bits_per_unit_rate } else { 0.0 };
        self.lambda_dl = lambda;
        self.lambda_ul = lambda;
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.k_embb_dl > self.k_dl {
            return Err(ConfigError::invalid("traffic.k_embb_dl", "eMBB UEs are a subset of the DL UEs"));
        }
        for (field, v) in [
            ("traffic.lambda_dl", self.lambda_dl),
            ("traffic.lambda_ul", self.lambda_ul),
            ("traffic.embb_rate_bps", self.embb_rate_bps),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ConfigError::invalid(field, "must be a finite non-negative number"));
            }
        }
        Ok(())
    }
}

/// Offered load `k × pkt_bits × lambda` in bits/s.
pub fn offered_load(k: usize, pkt_bits: u32, lambda: f64) -> f64 {
    k as f64 * pkt_bits as f64 * lambda
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub pathloss: PathlossParams,
    pub ue_noise_figure_db: f64,
    pub bs_noise_figure_db: f64,
    /// Interference suppression credited to the receiver against inter-cell
    /// interferers. Intra-cell CG collisions are never suppressed.
    pub irc_gain_db: f64,
    /// Array gain on the desired link (transmit beamforming plus receive combining).
    pub desired_array_gain_db: f64,
    /// Array gain applied to every interfering link.
    pub interference_array_gain_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let net = NetworkConfig::default();
        ChannelConfig {
            pathloss: PathlossParams::default(),
            ue_noise_figure_db: 9.0,
            bs_noise_figure_db: 5.0,
            irc_gain_db: 0.0,
            desired_array_gain_db: 10.0 * (net.bs_antennas as f64).log10()
                + 10.0 * (net.ue_antennas as f64).log10(),
            interference_array_gain_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    pub p0_dbm: f64,
    pub alpha: f64,
    pub retx_boost_db: f64,
    pub scheduler: SchedulerKind,
    /// Index into the MCS table of the fixed configured-grant MCS (QPSK 1/2).
    pub cg_mcs: usize,
    pub cg_subbands: u32,
    pub cg_subband_prbs: u32,
    /// PRBs charged per DL UE scheduled in a TTI.
    pub control_overhead_prbs: u32,
    /// Fraction of resource elements lost to reference signals.
    pub re_overhead: f64,
    pub pf_forgetting: f64,
    pub pf_chunk_prbs: u32,
    pub urllc_weight: f64,
    pub embb_weight: f64,
    pub max_retx: u32,
    pub urllc_target_bler: f64,
    pub embb_target_bler: f64,
    pub cqi_period_ms: f64,
    pub cqi_delay_ttis: u32,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            p0_dbm: -61.0,
            alpha: 1.0,
            retx_boost_db: 3.0,
            scheduler: SchedulerKind::MinHold,
            cg_mcs: crate::phy::QPSK_HALF_MCS,
            cg_subbands: 4,
            cg_subband_prbs: 12,
            control_overhead_prbs: 1,
            re_overhead: 0.25,
            pf_forgetting: 0.01,
            pf_chunk_prbs: 1,
            urllc_weight: 1000.0,
            embb_weight: 1.0,
            max_retx: 4,
            urllc_target_bler: 0.01,
            embb_target_bler: 0.1,
            cqi_period_ms: 5.0,
            cqi_delay_ttis: 2,
        }
    }
}

impl MacConfig {
    pub fn power_control(&self, net: &NetworkConfig) -> PowerControlConfig {
        PowerControlConfig {
            p0_dbm: self.p0_dbm,
            alpha: self.alpha,
            sigma_max_dbm: net.ue_max_power_dbm,
            retx_boost_db: self.retx_boost_db,
        }
    }

    fn validate(&self, net: &NetworkConfig) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::invalid("mac.alpha", "must lie in [0, 1]"));
        }
        if !self.p0_dbm.is_finite() || !self.retx_boost_db.is_finite() {
            return Err(ConfigError::invalid("mac.p0_dbm", "powers must be finite"));
        }
        if self.cg_subbands == 0 || self.cg_subband_prbs == 0 {
            return Err(ConfigError::invalid("mac.cg_subbands", "must be positive"));
        }
        if self.cg_subbands * self.cg_subband_prbs > net.prbs {
            return Err(ConfigError::invalid(
                "mac.cg_subband_prbs",
                format!(
                    "{} sub-bands of {} PRBs exceed the {}-PRB carrier",
                    self.cg_subbands, self.cg_subband_prbs, net.prbs
                ),
            ));
        }
        if self.cg_mcs >= crate::phy::McsTable::default().len() {
            return Err(ConfigError::invalid("mac.cg_mcs", "outside the MCS table"));
        }
        if !(0.0..1.0).contains(&self.re_overhead) {
            return Err(ConfigError::invalid("mac.re_overhead", "must lie in [0, 1)"));
        }
        if !(self.pf_forgetting > 0.0 && self.pf_forgetting <= 1.0) {
            return Err(ConfigError::invalid("mac.pf_forgetting", "must lie in (0, 1]"));
        }
        if self.pf_chunk_prbs == 0 {
            return Err(ConfigError::invalid("mac.pf_chunk_prbs", "must be positive"));
        }
        if !(self.urllc_weight > 0.0 && self.embb_weight > 0.0) {
            return Err(ConfigError::invalid("mac.urllc_weight", "weights must be positive"));
        }
        for (field, v) in [
            ("mac.urllc_target_bler", self.urllc_target_bler),
            ("mac.embb_target_bler", self.embb_target_bler),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ConfigError::invalid(field, "must lie in (0, 1)"));
            }
        }
        if !(self.cqi_period_ms > 0.0) {
            return Err(ConfigError::invalid("mac.cqi_period_ms", "must be positive"));
        }
        if self.control_overhead_prbs >= net.prbs {
            return Err(ConfigError::invalid("mac.control_overhead_prbs", "leaves no data PRBs"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TddConfig {
    pub mode: SelectionMode,
    pub min_dl_ttis: u32,
    pub min_ul_ttis: u32,
    pub iota_min: f64,
    pub iota_window: usize,
}

impl Default for TddConfig {
    fn default() -> Self {
        TddConfig {
            mode: SelectionMode::QosAware,
            min_dl_ttis: 1,
            min_ul_ttis: 1,
            iota_min: 0.01,
            iota_window: 100,
        }
    }
}

/// PHY processing times in OFDM symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingDelays {
    pub pdsch_prep: f64,
    pub pusch_prep: f64,
    pub pdsch_decode: f64,
    pub pusch_decode: f64,
}

impl Default for ProcessingDelays {
    fn default() -> Self {
        ProcessingDelays {
            pdsch_prep: 2.5,
            pusch_prep: 5.5,
            pdsch_decode: 4.5,
            pusch_decode: 5.5,
        }
    }
}

/// Delay rounded up onto the integer symbol grid.
pub fn symbols_ceil(delay: f64) -> u64 {
    delay.ceil() as u64
}

impl ProcessingDelays {
    fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("processing.pdsch_prep", self.pdsch_prep),
            ("processing.pusch_prep", self.pusch_prep),
            ("processing.pdsch_decode", self.pdsch_decode),
            ("processing.pusch_decode", self.pusch_decode),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ConfigError::invalid(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Run length and logging switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub horizon_frames: u64,
    pub warmup_frames: u64,
    pub log_frames: bool,
    pub log_sched: bool,
    pub trace_packets: bool,
    /// Width of the per-UE delivered-bits bins.
    pub throughput_bin_frames: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            horizon_frames: 2000,
            warmup_frames: 5,
            log_frames: true,
            log_sched: false,
            trace_packets: false,
            throughput_bin_frames: 100,
        }
    }
}

/// The complete experiment description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub traffic: TrafficConfig,
    pub channel: ChannelConfig,
    pub mac: MacConfig,
    pub tdd: TddConfig,
    pub processing: ProcessingDelays,
    pub sim: RunOptions,
}

impl SimConfig {
    /// Parses a TOML document and validates it.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses a TOML document, applies dotted `key=value` overrides, validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for spec in overrides {
            apply_override(&mut table, spec)?;
        }
        let cfg: SimConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `key=value` overrides to an already-built configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_toml_with_overrides(&self.to_toml_string(), overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.network.validate()?;
        self.traffic.validate()?;
        self.channel.pathloss.validate()?;
        for (field, v) in [
            ("channel.ue_noise_figure_db", self.channel.ue_noise_figure_db),
            ("channel.bs_noise_figure_db", self.channel.bs_noise_figure_db),
            ("channel.irc_gain_db", self.channel.irc_gain_db),
            ("channel.desired_array_gain_db", self.channel.desired_array_gain_db),
            ("channel.interference_array_gain_db", self.channel.interference_array_gain_db),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(field, "must be finite"));
            }
        }
        self.mac.validate(&self.network)?;
        self.processing.validate()?;
        let n_ttis = self.network.ttis_per_frame();
        if self.tdd.min_dl_ttis + self.tdd.min_ul_ttis > n_ttis {
            return Err(ConfigError::invalid("tdd.min_dl_ttis", "direction guarantees exceed the frame"));
        }
        if !(self.tdd.iota_min > 0.0 && self.tdd.iota_min <= 1.0) {
            return Err(ConfigError::invalid("tdd.iota_min", "must lie in (0, 1]"));
        }
        if self.tdd.iota_window == 0 {
            return Err(ConfigError::invalid("tdd.iota_window", "must be positive"));
        }
        if self.sim.horizon_frames <= self.sim.warmup_frames {
            return Err(ConfigError::invalid("sim.horizon_frames", "must exceed warmup_frames"));
        }
        if self.sim.throughput_bin_frames == 0 {
            return Err(ConfigError::invalid("sim.throughput_bin_frames", "must be positive"));
        }
        // A CG transmission carries one whole URLLC packet, even in a TTI
        // shortened by a guard symbol.
        let table = crate::phy::McsTable::default();
        let cap = crate::mac::cg::CgConfig::from_mac(&self.mac).capacity_bits(
            self.network.tti_symbols - 1,
            self.mac.re_overhead,
            &table,
        );
        if self.traffic.k_ul > 0 && self.traffic.urllc_pkt_ul_bits > cap {
            return Err(ConfigError::invalid(
                "traffic.urllc_pkt_ul_bits",
                format!("{} bits exceed the {cap}-bit configured-grant capacity", self.traffic.urllc_pkt_ul_bits),
            ));
        }
        Ok(())
    }
}

/// Loads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    load_config_with_overrides(path, &[])
}

pub fn load_config_with_overrides(path: impl AsRef<Path>, overrides: &[String]) -> Result<SimConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SimConfig::from_toml_with_overrides(&text, overrides)
}

/// Applies one `a.b.c=value` override. The value is parsed as a TOML literal
/// and falls back to a bare string, so `mac.scheduler=pf` works unquoted.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let bad = |reason: &str| ConfigError::Override {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let (key, raw) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(bad("empty key"));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for part in path {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| bad("path crosses a non-table value"))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.network.bandwidth_mhz, 20.0);
        assert_eq!(cfg.network.scs_khz, 30);
        assert_eq!(cfg.network.num_cells, 18);
        assert_eq!(cfg.network.bs_power_dbm, 30.0);
        assert_eq!(cfg.network.ue_max_power_dbm, 23.0);
        assert_eq!(cfg.network.carrier_freq_ghz, 3.5);
        assert_eq!(cfg.network.bs_height_m, 10.0);
        assert_eq!(cfg.network.ue_height_m, 1.5);
        assert_eq!(cfg.network.tti_symbols, 4);
        assert_eq!(cfg.mac.p0_dbm, -61.0);
        assert_eq!(cfg.mac.alpha, 1.0);
    }

    #[test]
    fn numerology() {
        let net = NetworkConfig::default();
        assert_eq!(net.slots_per_frame(), 20);
        assert_eq!(net.symbols_per_frame(), 280);
        assert_eq!(net.ttis_per_frame(), 70);
        assert!((net.symbol_duration_s() * 1e6 - 35.714_285_714).abs() < 1e-6);
    }

    #[test]
    fn single_cell_grid() {
        let cfg = SimConfig::from_toml_str("[network]\nnum_cells = 1\ngrid_rows = 1\ngrid_cols = 1\n").unwrap();
        assert_eq!(cfg.network.num_cells, 1);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let err = SimConfig::from_toml_str("[network]\nnum_cells = 18\ngrid_rows = 3\ngrid_cols = 5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid mismatch"), "{msg}");
        assert!(msg.contains("network.grid_rows"), "{msg}");
    }

    #[test]
    fn bad_scs_and_tti() {
        assert!(SimConfig::from_toml_str("[network]\nscs_khz = 45\n").is_err());
        assert!(SimConfig::from_toml_str("[network]\ntti_symbols = 3\n").is_err());
    }

    #[test]
    fn embb_subset_of_dl() {
        let err = SimConfig::from_toml_str("[traffic]\nk_dl = 2\nk_embb_dl = 3\n").unwrap_err();
        assert!(err.to_string().contains("traffic.k_embb_dl"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(SimConfig::from_toml_str("[network]\nnum_cellz = 3\n").is_err());
    }

    #[test]
    fn overrides_patch_the_tree() {
        let cfg = SimConfig::from_toml_with_overrides(
            "",
            &["traffic.lambda_dl=0".into(), "mac.scheduler=pf".into(), "mac.p0_dbm=-30".into()],
        )
        .unwrap();
        assert_eq!(cfg.traffic.lambda_dl, 0.0);
        assert_eq!(cfg.mac.scheduler, SchedulerKind::Pf);
        assert_eq!(cfg.mac.p0_dbm, -30.0);
        assert!(SimConfig::from_toml_with_overrides("", &["nonsense".into()]).is_err());
    }

    #[test]
    fn round_trip() {
        let mut cfg = SimConfig::default();
        cfg.mac.p0_dbm = -77.5;
        cfg.traffic.k_embb_dl = 3;
        let again = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn offered_load_examples() {
        assert_eq!(offered_load(8, 256, 50.0), 102_400.0);
        assert_eq!(offered_load(0, 256, 50.0), 0.0);
        assert_eq!(offered_load(16, 256, 50.0), 204_800.0);
        let t = TrafficConfig::default();
        assert_eq!(t.urllc_offered_load(), (102_400.0, 102_400.0, 204_800.0));
    }

    #[test]
    fn load_scaling_hits_target() {
        let mut t = TrafficConfig { k_embb_dl: 3, ..Default::default() };
        t.scale_to_offered_load(2e6);
        assert!((t.urllc_offered_load().2 - 2e6).abs() < 1e-6);
        assert_eq!(t.lambda_dl, t.lambda_ul);
    }

    #[test]
    fn oversized_ul_packet_rejected() {
        let err = SimConfig::from_toml_str("[traffic]\nurllc_pkt_ul_bits = 4000\n").unwrap_err();
        assert!(err.to_string().contains("configured-grant"));
    }
}
