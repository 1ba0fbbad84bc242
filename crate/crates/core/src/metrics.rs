//! Latency and throughput statistics.
//!
//! Quantiles use the nearest-rank rule: the `q`-quantile of `n` sorted
//! samples is the sample at 1-based rank `⌈q·n⌉`. Dropped packets enter the
//! latency distributions as `+∞`, so a tail quantile that reaches them is
//! reported as [`QuantileValue::ExceedsHorizon`] rather than a number.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::{Direction, Service};

/// One finished packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub ue: usize,
    pub service: Service,
    pub direction: Direction,
    /// Symbols from arrival to successful decoding, or to the drop.
    pub latency_symbols: u64,
    pub latency_s: f64,
    pub dropped: bool,
}

impl LatencySample {
    /// Latency with drops mapped to `+∞`.
    pub fn tail_value(&self) -> f64 {
        if self.dropped {
            f64::INFINITY
        } else {
            self.latency_s
        }
    }
}

/// Nearest-rank quantile; `None` for an empty sample set.
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(quantile_sorted(&sorted, q))
}

/// Nearest-rank quantile of already sorted, non-empty samples.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    // The epsilon keeps q·n that is integral up to rounding on its own rank.
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// `P(X > x)` at every distinct sample value.
pub fn ccdf(samples: &[f64]) -> Vec<(f64, f64)> {
    ecdf(samples).into_iter().map(|(x, p)| (x, 1.0 - p)).collect()
}

/// `P(X ≤ x)` at every distinct sample value.
pub fn ecdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = p,
            _ => out.push((x, p)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QuantileValue {
    Seconds(f64),
    /// The quantile falls on a dropped packet.
    ExceedsHorizon,
    NoData,
}

impl QuantileValue {
    pub fn from_option(v: Option<f64>) -> Self {
        match v {
            None => QuantileValue::NoData,
            Some(x) if x.is_infinite() => QuantileValue::ExceedsHorizon,
            Some(x) => QuantileValue::Seconds(x),
        }
    }

    pub fn ms(&self) -> Option<f64> {
        match self {
            QuantileValue::Seconds(s) => Some(s * 1e3),
            _ => None,
        }
    }

    /// Milliseconds for ordering: drops are `+∞`, no data is `NaN`.
    pub fn ms_or_inf(&self) -> f64 {
        match self {
            QuantileValue::Seconds(s) => s * 1e3,
            QuantileValue::ExceedsHorizon => f64::INFINITY,
            QuantileValue::NoData => f64::NAN,
        }
    }

    /// `"0.643"`, `"inf"` or `"nodata"`.
    pub fn display_ms(&self) -> String {
        match self {
            QuantileValue::Seconds(s) => format!("{:.4}", s * 1e3),
            QuantileValue::ExceedsHorizon => "inf".into(),
            QuantileValue::NoData => "nodata".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outage {
    pub reliability: f64,
    pub latency: QuantileValue,
    pub samples: usize,
    /// Fewer than `10 / (1 - reliability)` samples.
    pub low_confidence: bool,
}

/// Latency met by a `reliability` share of packets, drops included.
pub fn outage_latency(samples: &[LatencySample], reliability: f64) -> Outage {
    let values: Vec<f64> = samples.iter().map(LatencySample::tail_value).collect();
    let needed = 10.0 / (1.0 - reliability);
    Outage {
        reliability,
        latency: QuantileValue::from_option(quantile(&values, reliability)),
        samples: values.len(),
        low_confidence: (values.len() as f64) < needed,
    }
}

/// ECDF of per-UE throughput in Mbps.
pub fn embb_ecdf(delivered_bits: &[u64], window_s: f64) -> Vec<(f64, f64)> {
    assert!(window_s > 0.0);
    let mbps: Vec<f64> = delivered_bits.iter().map(|&b| b as f64 / window_s / 1e6).collect();
    ecdf(&mbps)
}

/// Event counts over a whole run, warmup included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub arrivals: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub dl_transmissions: u64,
    pub ul_transmissions: u64,
    pub dl_retransmissions: u64,
    pub ul_retransmissions: u64,
    pub segmentations: u64,
    pub receptions: u64,
    /// Receptions with at least one opposite-direction interferer.
    pub cli_receptions: u64,
    /// UL receptions sharing their sub-band with another UE of the cell.
    pub cg_collisions: u64,
    pub causality_violations: u64,
    pub power_violations: u64,
    pub guard_violations: u64,
}

impl Counters {
    pub fn conserved(&self) -> bool {
        self.arrivals == self.delivered + self.dropped + self.in_flight
    }

    pub fn add(&mut self, o: &Counters) {
        self.arrivals += o.arrivals;
        self.delivered += o.delivered;
        self.dropped += o.dropped;
        self.in_flight += o.in_flight;
        self.dl_transmissions += o.dl_transmissions;
        self.ul_transmissions += o.ul_transmissions;
        self.dl_retransmissions += o.dl_retransmissions;
        self.ul_retransmissions += o.ul_retransmissions;
        self.segmentations += o.segmentations;
        self.receptions += o.receptions;
        self.cli_receptions += o.cli_receptions;
        self.cg_collisions += o.cg_collisions;
        self.causality_violations += o.causality_violations;
        self.power_violations += o.power_violations;
        self.guard_violations += o.guard_violations;
    }
}

/// Delivered bits of one UE over the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeThroughput {
    pub seed: u64,
    pub ue: usize,
    pub cell: usize,
    pub service: Service,
    pub direction: Direction,
    pub delivered_bits: u64,
    /// Delivered bits per bin of `throughput_bin_frames` frames.
    pub bins: Vec<u64>,
    pub window_s: f64,
}

impl UeThroughput {
    pub fn mbps(&self) -> f64 {
        self.delivered_bits as f64 / self.window_s / 1e6
    }
}

/// Headline numbers of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub urllc_samples: usize,
    pub p50: QuantileValue,
    pub p99: QuantileValue,
    pub p999: QuantileValue,
    pub urllc_dl_p99: QuantileValue,
    pub urllc_ul_p99: QuantileValue,
    pub embb_median_mbps: Option<f64>,
    /// Dropped share of all finished packets.
    pub drop_rate: f64,
}

/// Results of one or more runs of the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seeds: Vec<u64>,
    pub config: SimConfig,
    pub counters: Counters,
    pub samples: Vec<LatencySample>,
    pub ue_throughput: Vec<UeThroughput>,
}

impl SimReport {
    pub fn new(config: SimConfig, seed: u64) -> Self {
        SimReport {
            seeds: vec![seed],
            config,
            counters: Counters::default(),
            samples: Vec::new(),
            ue_throughput: Vec::new(),
        }
    }

    /// Seed aggregation: counters add up, samples concatenate.
    pub fn merge(&mut self, other: &SimReport) {
        self.seeds.extend_from_slice(&other.seeds);
        self.counters.add(&other.counters);
        self.samples.extend_from_slice(&other.samples);
        self.ue_throughput.extend_from_slice(&other.ue_throughput);
    }

    pub fn merged(reports: &[SimReport]) -> Option<SimReport> {
        let (first, rest) = reports.split_first()?;
        let mut out = first.clone();
        for r in rest {
            out.merge(r);
        }
        Some(out)
    }

    /// Samples of a service, optionally restricted to one direction.
    pub fn samples_of(&self, service: Service, direction: Option<Direction>) -> Vec<LatencySample> {
        self.samples
            .iter()
            .filter(|s| s.service == service && direction.is_none_or(|d| s.direction == d))
            .copied()
            .collect()
    }

    /// Tail values (drops as `+∞`) in seconds.
    pub fn latencies(&self, service: Service, direction: Option<Direction>) -> Vec<f64> {
        self.samples_of(service, direction).iter().map(LatencySample::tail_value).collect()
    }

    pub fn urllc_quantile(&self, direction: Option<Direction>, q: f64) -> QuantileValue {
        QuantileValue::from_option(quantile(&self.latencies(Service::Urllc, direction), q))
    }

    pub fn embb_throughputs_mbps(&self) -> Vec<f64> {
        self.ue_throughput
            .iter()
            .filter(|t| t.service == Service::Embb)
            .map(UeThroughput::mbps)
            .collect()
    }

    pub fn summary(&self) -> Summary {
        let mut pooled = self.latencies(Service::Urllc, None);
        pooled.sort_by(f64::total_cmp);
        let q = |p: f64| {
            QuantileValue::from_option((!pooled.is_empty()).then(|| quantile_sorted(&pooled, p)))
        };
        let dropped = self.samples.iter().filter(|s| s.dropped).count();
        Summary {
            urllc_samples: pooled.len(),
            p50: q(0.5),
            p99: q(0.99),
            p999: q(0.999),
            urllc_dl_p99: self.urllc_quantile(Some(Direction::Dl), 0.99),
            urllc_ul_p99: self.urllc_quantile(Some(Direction::Ul), 0.99),
            embb_median_mbps: quantile(&self.embb_throughputs_mbps(), 0.5),
            drop_rate: if self.samples.is_empty() { 0.0 } else { dropped as f64 / self.samples.len() as f64 },
        }
    }

    pub fn summary_line(&self) -> String {
        let s = self.summary();
        let ms = |q: QuantileValue| q.ms().map_or(q.display_ms(), |v| format!("{v:.4}ms"));
        format!(
            "urllc n={} p50={} p99={} p99.9={} | embb median={} | drops={:.5}",
            s.urllc_samples,
            ms(s.p50),
            ms(s.p99),
            ms(s.p999),
            s.embb_median_mbps.map_or("nodata".into(), |m| format!("{m:.4} Mbps")),
            s.drop_rate,
        )
    }

    /// JSON document with counters, quantiles and per-UE throughput but no
    /// raw samples (those go to the CSV dump).
    pub fn to_json(&self) -> serde_json::Value {
        let part = |service: Service, direction: Option<Direction>| {
            let samples = self.samples_of(service, direction);
            serde_json::json!({
                "samples": samples.len(),
                "dropped": samples.iter().filter(|s| s.dropped).count(),
                "p50": outage_latency(&samples, 0.5),
                "p99": outage_latency(&samples, 0.99),
                "p999": outage_latency(&samples, 0.999),
                "p99999": outage_latency(&samples, 0.99999),
            })
        };
        serde_json::json!({
            "seeds": self.seeds,
            "summary": self.summary(),
            "conservation_ok": self.counters.conserved(),
            "counters": self.counters,
            "latency": {
                "urllc": part(Service::Urllc, None),
                "urllc_dl": part(Service::Urllc, Some(Direction::Dl)),
                "urllc_ul": part(Service::Urllc, Some(Direction::Ul)),
                "embb_dl": part(Service::Embb, Some(Direction::Dl)),
            },
            "ue_throughput": self.ue_throughput,
            "config": self.config,
        })
    }

    /// Writes `latency_ms,service,direction,dropped`, one row per sample.
    pub fn write_latency_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["latency_ms", "service", "direction", "dropped"])?;
        for s in &self.samples {
            w.write_record([
                format!("{:.6}", s.latency_s * 1e3),
                s.service.as_str().to_string(),
                s.direction.as_str().to_string(),
                (s.dropped as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
