//! Packet arrivals and per-UE transmit buffers.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::{Direction, Service};

pub type PacketId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub ue: usize,
    pub direction: Direction,
    pub service: Service,
    pub size_bits: u32,
    /// Arrival symbol index.
    pub arrival: u64,
    pub remaining_bits: u32,
    pub first_tx_done: bool,
    pub delivered: Option<u64>,
}

impl Packet {
    pub fn new(id: PacketId, ue: usize, direction: Direction, service: Service, size_bits: u32, arrival: u64) -> Self {
        Packet {
            id,
            ue,
            direction,
            service,
            size_bits,
            arrival,
            remaining_bits: size_bits,
            first_tx_done: false,
            delivered: None,
        }
    }
}

/// A slice of one packet taken out of a buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub packet: PacketId,
    pub bits: u32,
    /// True when this segment leaves the packet with bits still buffered.
    pub partial: bool,
}

/// FIFO transmit buffer with exact bit accounting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UeBuffer {
    queue: VecDeque<Packet>,
    total_buffered_bits: u64,
    enqueued_bits: u64,
    extracted_bits: u64,
    purged_bits: u64,
}

impl UeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn enqueue(&mut self, packet: Packet) {
        debug_assert!(self.queue.back().is_none_or(|p| p.arrival <= packet.arrival));
        self.total_buffered_bits += packet.remaining_bits as u64;
        self.enqueued_bits += packet.remaining_bits as u64;
        self.queue.push_back(packet);
    }

    /// Serves up to `max_bits` in FIFO order, splitting at most the last
    /// packet touched.
    pub fn extract_bits(&mut self, max_bits: u64) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut budget = max_bits;
        while budget > 0 {
            let Some(head) = self.queue.front_mut() else { break };
            let take = (head.remaining_bits as u64).min(budget) as u32;
            head.remaining_bits -= take;
            head.first_tx_done = true;
            budget -= take as u64;
            let partial = head.remaining_bits > 0;
            out.push(Segment {
                packet: head.id,
                bits: take,
                partial,
            });
            if !partial {
                self.queue.pop_front();
            }
        }
        let taken: u64 = out.iter().map(|s| s.bits as u64).sum();
        self.total_buffered_bits -= taken;
        self.extracted_bits += taken;
        out
    }

    /// Drops whatever is left of `packet`; returns the discarded bits.
    pub fn purge(&mut self, packet: PacketId) -> u32 {
        let Some(pos) = self.queue.iter().position(|p| p.id == packet) else {
            return 0;
        };
        let p = self.queue.remove(pos).expect("position is valid");
        self.total_buffered_bits -= p.remaining_bits as u64;
        self.purged_bits += p.remaining_bits as u64;
        p.remaining_bits
    }

    pub fn total_buffered_bits(&self) -> u64 {
        self.total_buffered_bits
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn head(&self) -> Option<&Packet> {
        self.queue.front()
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    /// Buffered bits of packets that arrived at or before `cutoff`.
    pub fn eligible_bits(&self, cutoff: u64) -> u64 {
        self.queue
            .iter()
            .take_while(|p| p.arrival <= cutoff)
            .map(|p| p.remaining_bits as u64)
            .sum()
    }

    pub fn enqueued_bits(&self) -> u64 {
        self.enqueued_bits
    }

    pub fn extracted_bits(&self) -> u64 {
        self.extracted_bits
    }

    pub fn purged_bits(&self) -> u64 {
        self.purged_bits
    }

    /// Verifies `total == Σ remaining` and `enqueued == extracted + purged + buffered`.
    pub fn check(&self) -> bool {
        let sum: u64 = self.queue.iter().map(|p| p.remaining_bits as u64).sum();
        sum == self.total_buffered_bits
            && self.enqueued_bits == self.extracted_bits + self.purged_bits + self.total_buffered_bits
            && self.queue.iter().all(|p| p.remaining_bits <= p.size_bits)
    }
}

/// Poisson process arrival times in seconds, lazily generated.
#[derive(Debug, Clone)]
pub struct PoissonArrivals<R> {
    gap: Option<Exp<f64>>,
    rng: R,
    t: f64,
    horizon: f64,
}

impl<R: Rng> PoissonArrivals<R> {
    pub fn new(lambda: f64, horizon_s: f64, rng: R) -> Self {
        let gap = if lambda > 0.0 { Some(Exp::new(lambda).expect("positive rate")) } else { None };
        PoissonArrivals {
            gap,
            rng,
            t: 0.0,
            horizon: horizon_s,
        }
    }
}

impl<R: Rng> Iterator for PoissonArrivals<R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let gap = self.gap.as_ref()?;
        self.t += gap.sample(&mut self.rng);
        (self.t < self.horizon).then_some(self.t)
    }
}

/// Exponential inter-arrival times with mean `1/lambda` on `[0, horizon)`.
pub fn poisson_arrivals<R: Rng>(lambda: f64, horizon_s: f64, rng: &mut R) -> Vec<f64> {
    PoissonArrivals::new(lambda, horizon_s, rng).collect()
}

/// Constant-bit-rate arrivals in seconds, lazily generated.
#[derive(Debug, Clone)]
pub struct CbrArrivals {
    period: f64,
    next: f64,
    horizon: f64,
}

impl CbrArrivals {
    /// `phase_s` is the first arrival instant; `None` means one full period.
    pub fn new(pkt_bits: u32, rate_bps: f64, horizon_s: f64, phase_s: Option<f64>) -> Self {
        if !(rate_bps > 0.0) || pkt_bits == 0 {
            return CbrArrivals {
                period: f64::INFINITY,
                next: f64::INFINITY,
                horizon: horizon_s,
            };
        }
        let period = pkt_bits as f64 / rate_bps;
        CbrArrivals {
            period,
            next: phase_s.unwrap_or(period),
            horizon: horizon_s,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }
}

impl Iterator for CbrArrivals {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.next >= self.horizon {
            return None;
        }
        let t = self.next;
        self.next += self.period;
        Some(t)
    }
}

/// CBR arrival times on `[0, horizon)` with the first arrival after one period.
pub fn cbr_arrivals(pkt_bits: u32, rate_bps: f64, horizon_s: f64) -> Vec<f64> {
    CbrArrivals::new(pkt_bits, rate_bps, horizon_s, None).collect()
}
