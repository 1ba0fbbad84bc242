//! DL dynamic schedulers.
//!
//! A scheduling round takes the pending HARQ retransmissions and one
//! [`SchedCandidate`] per backlogged UE and returns a [`SchedDecision`].
//! Retransmissions go first with their original PRB count and MCS. The
//! remaining PRBs are shared by one of two policies:
//!
//! - **Weighted PF**: PRB chunks go one at a time to the UE maximising
//!   `w · r / ((1-β)·avg + β·a)`, where `a` is the rate already granted to
//!   that UE in the current TTI. URLLC weights dwarf eMBB weights, so URLLC is
//!   served first, and the in-TTI term spreads PRBs across UEs of a class.
//! - **min-HoLD**: URLLC packets are taken oldest first and only whole; once
//!   nothing else fits, exactly one packet is segmented, picking the cheapest
//!   one in control overhead. What is left goes to eMBB by PF.
//!
//! Every scheduled UE costs `control_overhead_prbs`. The control region sits
//! at the bottom of the carrier and data allocations follow contiguously in
//! grant order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Service;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Pf,
    MinHold,
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerKind::Pf => "pf",
            SchedulerKind::MinHold => "min_hold",
        })
    }
}

/// Cell-wide scheduling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedParams {
    pub total_prbs: u32,
    pub control_overhead_prbs: u32,
    /// PF forgetting factor β.
    pub pf_forgetting: f64,
    pub pf_chunk_prbs: u32,
    pub tti_duration_s: f64,
}

/// Buffered bits of one packet that is ready for transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingPacket {
    /// Arrival symbol.
    pub arrival: u64,
    pub bits: u32,
}

/// A backlogged DL UE as seen by the scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedCandidate {
    pub ue: usize,
    pub service: Service,
    pub weight: f64,
    /// Exponentially averaged served rate in bit/s (PF denominator).
    pub avg_throughput: f64,
    pub mcs: usize,
    pub bits_per_prb: u32,
    /// Eligible packets in FIFO order.
    pub packets: Vec<PendingPacket>,
}

impl SchedCandidate {
    pub fn demand_bits(&self) -> u64 {
        self.packets.iter().map(|p| p.bits as u64).sum()
    }

    /// Arrival symbol of the head-of-line packet.
    pub fn hold_head(&self) -> Option<u64> {
        self.packets.first().map(|p| p.arrival)
    }

    fn demand_prbs(&self) -> u32 {
        if self.bits_per_prb == 0 {
            return 0;
        }
        self.demand_bits().div_ceil(self.bits_per_prb as u64) as u32
    }
}

/// A transport block waiting for retransmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetxRequest {
    pub harq_id: u64,
    pub ue: usize,
    pub service: Service,
    pub prb_count: u32,
    pub mcs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub ue: usize,
    pub service: Service,
    pub prb_start: u32,
    pub prb_count: u32,
    pub mcs: usize,
    /// Payload bits to take from the UE buffer (first transmissions).
    pub bits: u32,
    /// Whether `bits` ends inside a packet.
    pub segmented: bool,
    pub retx: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedDecision {
    pub tti_index: u64,
    pub allocations: Vec<Allocation>,
    pub control_overhead_prbs: u32,
}

impl SchedDecision {
    /// PRBs occupied by control and data; the BS transmits on `0..used_prbs()`.
    pub fn used_prbs(&self) -> u32 {
        self.control_overhead_prbs + self.allocations.iter().map(|a| a.prb_count).sum::<u32>()
    }

    pub fn segmentations(&self) -> usize {
        self.allocations.iter().filter(|a| a.segmented).count()
    }

    /// Checks disjointness and the grid bound.
    pub fn check(&self, total_prbs: u32) -> Result<(), String> {
        let mut spans: Vec<(u32, u32)> = self
            .allocations
            .iter()
            .map(|a| (a.prb_start, a.prb_start + a.prb_count))
            .collect();
        spans.push((0, self.control_overhead_prbs));
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(format!("overlapping PRBs {:?} and {:?}", w[0], w[1]));
            }
        }
        if self.used_prbs() > total_prbs {
            return Err(format!("{} PRBs used of {total_prbs}", self.used_prbs()));
        }
        Ok(())
    }
}

/// `w · r / avg` with the averaged rate floored at a small epsilon.
pub fn pf_metric(weight: f64, inst_rate: f64, avg_rate: f64) -> f64 {
    weight * inst_rate / avg_rate.max(AVG_FLOOR)
}

/// Index of the largest PF metric over `(weight, rate, avg)`; ties go to the
/// lowest index.
pub fn pf_argmax(entries: &[(f64, f64, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(w, r, a)) in entries.iter().enumerate() {
        let m = pf_metric(w, r, a);
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

/// Floor on the averaged throughput, in bit/s.
pub const AVG_FLOOR: f64 = 1.0;

/// Exponential update of a PF average after one TTI.
pub fn update_avg_throughput(avg: f64, served_bits: u64, tti_duration_s: f64, beta: f64) -> f64 {
    ((1.0 - beta) * avg + beta * served_bits as f64 / tti_duration_s).max(AVG_FLOOR)
}

/// True when serving `bits` FIFO from `packets` stops inside a packet.
fn cuts_packet(packets: &[PendingPacket], bits: u64) -> bool {
    let mut cum = 0u64;
    for p in packets {
        if cum >= bits {
            return false;
        }
        cum += p.bits as u64;
        if cum > bits {
            return true;
        }
    }
    false
}

/// A first-transmission grant before PRB layout.
#[derive(Debug, Clone, Copy)]
struct Grant {
    cand: usize,
    prbs: u32,
    bits: u64,
}

struct Budget<'a> {
    remaining: u32,
    scheduled: BTreeSet<usize>,
    params: &'a SchedParams,
}

impl Budget<'_> {
    fn overhead_for(&self, ue: usize) -> u32 {
        if self.scheduled.contains(&ue) {
            0
        } else {
            self.params.control_overhead_prbs
        }
    }
}

/// PF over `order` (candidate indices); appends to `grants`.
fn pf_fill(cands: &[SchedCandidate], order: &[usize], budget: &mut Budget, grants: &mut Vec<Grant>) {
    let p = budget.params;
    let mut granted = vec![0u32; cands.len()];
    let mut slot = vec![usize::MAX; cands.len()];
    loop {
        let mut best: Option<(usize, f64, u32)> = None;
        for &i in order {
            let c = &cands[i];
            let want = c.demand_prbs().saturating_sub(granted[i]);
            if want == 0 {
                continue;
            }
            let ovh = if granted[i] == 0 { budget.overhead_for(c.ue) } else { 0 };
            if budget.remaining <= ovh {
                continue;
            }
            let chunk = want.min(p.pf_chunk_prbs).min(budget.remaining - ovh);
            let rate = c.bits_per_prb as f64 / p.tti_duration_s;
            let in_tti = granted[i] as f64 * rate;
            let avg = (1.0 - p.pf_forgetting) * c.avg_throughput + p.pf_forgetting * in_tti;
            let m = pf_metric(c.weight, rate, avg);
            // Candidates arrive sorted by UE id, so strict > keeps the lowest id.
            if best.is_none_or(|(_, b, _)| m > b) {
                best = Some((i, m, chunk + ovh));
            }
        }
        let Some((i, _, cost)) = best else { break };
        let c = &cands[i];
        let ovh = if granted[i] == 0 { budget.overhead_for(c.ue) } else { 0 };
        budget.remaining -= cost;
        granted[i] += cost - ovh;
        budget.scheduled.insert(c.ue);
        if slot[i] == usize::MAX {
            slot[i] = grants.len();
            grants.push(Grant { cand: i, prbs: 0, bits: 0 });
        }
        let g = &mut grants[slot[i]];
        g.prbs = granted[i];
        g.bits = (granted[i] as u64 * c.bits_per_prb as u64).min(c.demand_bits());
    }
}

fn sorted_by_ue(cands: &[SchedCandidate], pred: impl Fn(&SchedCandidate) -> bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cands.len()).filter(|&i| pred(&cands[i])).collect();
    idx.sort_by_key(|&i| cands[i].ue);
    idx
}

/// Whole URLLC packets oldest first, then at most one segmented packet.
fn min_hold_fill(cands: &[SchedCandidate], budget: &mut Budget, grants: &mut Vec<Grant>) {
    // (arrival, ue, cand, packet index)
    let mut queue: Vec<(u64, usize, usize, usize)> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        if c.service != Service::Urllc || c.bits_per_prb == 0 {
            continue;
        }
        for (k, p) in c.packets.iter().enumerate() {
            queue.push((p.arrival, c.ue, i, k));
        }
    }
    queue.sort_unstable();

    let mut bits = vec![0u64; cands.len()];
    let mut prbs = vec![0u32; cands.len()];
    let mut blocked: Vec<Option<(u64, usize)>> = vec![None; cands.len()];
    let mut order: Vec<usize> = Vec::new();
    for &(arrival, ue, i, k) in &queue {
        if blocked[i].is_some() {
            continue;
        }
        let c = &cands[i];
        let new_bits = bits[i] + c.packets[k].bits as u64;
        let new_prbs = new_bits.div_ceil(c.bits_per_prb as u64) as u32;
        let ovh = if prbs[i] == 0 { budget.overhead_for(ue) } else { 0 };
        let cost = new_prbs - prbs[i] + ovh;
        if cost <= budget.remaining {
            budget.remaining -= cost;
            if prbs[i] == 0 && bits[i] == 0 {
                order.push(i);
            }
            bits[i] = new_bits;
            prbs[i] = new_prbs;
            budget.scheduled.insert(ue);
        } else {
            blocked[i] = Some((arrival, k));
        }
    }

    // One segmentation: cheapest control cost, then oldest packet.
    let mut seg: Option<(u32, u64, usize, usize)> = None;
    for (i, b) in blocked.iter().enumerate() {
        let Some((arrival, _)) = *b else { continue };
        let c = &cands[i];
        let cost = if prbs[i] > 0 { 0 } else { budget.overhead_for(c.ue) };
        let slack = prbs[i] as u64 * c.bits_per_prb as u64 - bits[i];
        let room = slack + budget.remaining.saturating_sub(cost) as u64 * c.bits_per_prb as u64;
        if room == 0 || cost >= budget.remaining && slack == 0 {
            continue;
        }
        let key = (cost, arrival, c.ue, i);
        if seg.is_none_or(|s| key < s) {
            seg = Some(key);
        }
    }
    if let Some((cost, _, _, i)) = seg {
        let c = &cands[i];
        let extra_prbs = budget.remaining - cost;
        budget.remaining = 0;
        if prbs[i] == 0 {
            order.push(i);
        }
        prbs[i] += extra_prbs;
        let cap = prbs[i] as u64 * c.bits_per_prb as u64;
        bits[i] = cap.min(c.demand_bits());
        // Drop PRBs the segment cannot use.
        let needed = bits[i].div_ceil(c.bits_per_prb as u64) as u32;
        budget.remaining += prbs[i] - needed;
        prbs[i] = needed;
        budget.scheduled.insert(c.ue);
    }

    for i in order {
        grants.push(Grant { cand: i, prbs: prbs[i], bits: bits[i] });
    }
}

/// Lays out retransmissions and grants and builds the decision.
fn layout(
    tti: u64,
    cands: &[SchedCandidate],
    retx: &[RetxRequest],
    grants: &[Grant],
    scheduled: &BTreeSet<usize>,
    params: &SchedParams,
) -> SchedDecision {
    let ctrl = scheduled.len() as u32 * params.control_overhead_prbs;
    let mut start = ctrl;
    let mut allocations = Vec::with_capacity(retx.len() + grants.len());
    for r in retx {
        allocations.push(Allocation {
            ue: r.ue,
            service: r.service,
            prb_start: start,
            prb_count: r.prb_count,
            mcs: r.mcs,
            bits: 0,
            segmented: false,
            retx: Some(r.harq_id),
        });
        start += r.prb_count;
    }
    for g in grants.iter().filter(|g| g.bits > 0) {
        let c = &cands[g.cand];
        allocations.push(Allocation {
            ue: c.ue,
            service: c.service,
            prb_start: start,
            prb_count: g.prbs,
            mcs: c.mcs,
            bits: g.bits as u32,
            segmented: cuts_packet(&c.packets, g.bits),
            retx: None,
        });
        start += g.prbs;
    }
    SchedDecision {
        tti_index: tti,
        allocations,
        control_overhead_prbs: ctrl,
    }
}

/// Full scheduling round: retransmissions first, then `kind` on the rest.
pub fn schedule(
    kind: SchedulerKind,
    tti: u64,
    retx: &[RetxRequest],
    cands: &[SchedCandidate],
    params: &SchedParams,
) -> SchedDecision {
    let mut budget = Budget {
        remaining: params.total_prbs,
        scheduled: BTreeSet::new(),
        params,
    };
    let mut taken = Vec::new();
    for r in retx {
        let cost = r.prb_count + budget.overhead_for(r.ue);
        if cost <= budget.remaining {
            budget.remaining -= cost;
            budget.scheduled.insert(r.ue);
            taken.push(*r);
        }
    }
    let mut grants = Vec::new();
    match kind {
        SchedulerKind::Pf => {
            let order = sorted_by_ue(cands, |_| true);
            pf_fill(cands, &order, &mut budget, &mut grants);
        }
        SchedulerKind::MinHold => {
            min_hold_fill(cands, &mut budget, &mut grants);
            let order = sorted_by_ue(cands, |c| c.service == Service::Embb);
            pf_fill(cands, &order, &mut budget, &mut grants);
        }
    }
    // Zero-bit grants never happen, but keep the control count honest.
    let scheduled: BTreeSet<usize> = taken
        .iter()
        .map(|r| r.ue)
        .chain(grants.iter().filter(|g| g.bits > 0).map(|g| cands[g.cand].ue))
        .collect();
    layout(tti, cands, &taken, &grants, &scheduled, params)
}

/// Weighted PF over first transmissions only.
pub fn schedule_pf(tti: u64, cands: &[SchedCandidate], params: &SchedParams) -> SchedDecision {
    schedule(SchedulerKind::Pf, tti, &[], cands, params)
}

/// min-HoLD over first transmissions only.
pub fn schedule_min_hold(tti: u64, cands: &[SchedCandidate], params: &SchedParams) -> SchedDecision {
    schedule(SchedulerKind::MinHold, tti, &[], cands, params)
}
