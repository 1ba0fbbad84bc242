//! Discrete-event network simulation on the OFDM symbol grid.
//!
//! One [`Simulation`] owns the whole network: topology, link gains, per-UE
//! buffers, per-cell frame state and every HARQ process in flight. Time is an
//! integer symbol index. Work happens only at event symbols, so the loop
//! jumps straight from one event to the next. At a TTI start all cells first
//! decide what they transmit, then every reception's SINR is computed against
//! the complete set of concurrent transmitters, cross-link pairs included.
//! See `docs/timing.md` for the delay chain.

pub mod clock;
pub mod events;
pub mod interference;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{build_link_matrix, noise_dbm, LinkMatrix};
use crate::config::{symbols_ceil, SimConfig};
use crate::error::SimError;
use crate::mac::cg::{cg_transmit, CgConfig};
use crate::mac::harq::{harq_step, HarqAction, HarqEvent, HarqProcess, HarqState};
use crate::mac::link_adaptation::{select_mcs, CqiTracker};
use crate::mac::power::{retx_power, PowerControlConfig};
use crate::mac::scheduler::{schedule, update_avg_throughput, PendingPacket, RetxRequest, SchedCandidate, SchedDecision, SchedParams, AVG_FLOOR};
use crate::metrics::{Counters, LatencySample, SimReport, UeThroughput};
use crate::phy::{bler, McsTable};
use crate::tdd::{BufferObservation, BufferRatioSelector, CellBlerTracker, FrameConfig, FrameSelector, FrameShape};
use crate::topology::{build_topology, Topology};
use crate::traffic::{CbrArrivals, Packet, PacketId, PoissonArrivals, UeBuffer};
use crate::{db_to_lin, lin_to_db, Direction, Service};

pub use clock::Clock;
pub use events::{Event, EventQueue};
pub use interference::{cross_link_interferers, ActiveTx, Interferer, InterfererKind};

/// RNG sub-stream identifiers; traffic streams are `STREAM_TRAFFIC + ue`.
const STREAM_TOPOLOGY: u64 = 1;
const STREAM_LINKS: u64 = 2;
const STREAM_DECODE: u64 = 3;
const STREAM_CG: u64 = 4;
const STREAM_TRAFFIC: u64 = 1000;

/// Lowest plausible transmit power; anything below signals a bug.
const MIN_SANE_POWER_DBM: f64 = -100.0;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `frame_idx,bs,mu_bar,dl_fraction,pattern`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLogRow {
    pub frame_idx: u64,
    pub bs: usize,
    pub mu_bar: f64,
    pub dl_fraction: f64,
    pub pattern: String,
}

/// `tti,bs,ue,prbs,mcs,segmented,service`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedLogRow {
    pub tti: u64,
    pub bs: usize,
    pub ue: usize,
    pub prbs: u32,
    pub mcs: usize,
    pub segmented: bool,
    pub service: Service,
}

/// `pkt_id,ue,dir,service,bits,arrival_sym,delivered_sym,dropped`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub pkt_id: PacketId,
    pub ue: usize,
    pub dir: Direction,
    pub service: Service,
    pub bits: u32,
    pub arrival_sym: u64,
    pub delivered_sym: Option<u64>,
    pub dropped: bool,
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: SimReport,
    pub frames: Vec<FrameLogRow>,
    pub sched_log: Vec<SchedLogRow>,
    pub trace: Vec<TraceRow>,
}

/// Observable happenings returned by [`Simulation::advance_symbol`].
#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent {
    FrameSelected { bs: usize, frame: u64, dl_fraction: f64 },
    Scheduled { bs: usize, decision: SchedDecision },
    UlTransmission { ue: usize, bs: usize, retx: bool },
    Delivered { packet: PacketId, ue: usize, latency_symbols: u64 },
    Dropped { packet: PacketId, ue: usize },
}

enum Source {
    Poisson(PoissonArrivals<ChaCha8Rng>),
    Cbr(CbrArrivals),
}

impl Source {
    fn next(&mut self) -> Option<f64> {
        match self {
            Source::Poisson(p) => p.next(),
            Source::Cbr(c) => c.next(),
        }
    }
}

struct UeState {
    cell: usize,
    direction: Direction,
    service: Service,
    pkt_bits: u32,
    buffer: UeBuffer,
    source: Source,
    weight: f64,
    avg_throughput: f64,
    cqi: CqiTracker,
    /// UL: HARQ processes granted a retransmission.
    ul_retx: Vec<u64>,
    /// Position among the cell's UL UEs (BLER window index).
    ul_index: usize,
    coupling_loss_db: f64,
    delivered_bits: u64,
    bins: Vec<u64>,
}

struct CellState {
    frame: FrameConfig,
    observations: Vec<BufferObservation>,
    bler: CellBlerTracker,
    dl_ues: Vec<usize>,
    ul_ues: Vec<usize>,
    urllc_configured: bool,
    /// DL NACKs waiting for an UL TTI: (ready symbol, process).
    pending_nacks: Vec<(u64, u64)>,
    /// UL grants waiting for a DL TTI: (ready symbol, process).
    pending_grants: Vec<(u64, u64)>,
    /// DL processes waiting for retransmission.
    dl_retx: Vec<u64>,
}

struct PacketRecord {
    ue: usize,
    direction: Direction,
    service: Service,
    size_bits: u32,
    arrival: u64,
    decoded_bits: u32,
}

struct Reception {
    harq: u64,
    desired_tx: usize,
    rx_node: usize,
    cell: usize,
    direction: Direction,
    prbs: Range<u32>,
}

/// Delays on the integer symbol grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolDelays {
    pub pdsch_prep: u64,
    pub pusch_prep: u64,
    pub pdsch_decode: u64,
    pub pusch_decode: u64,
    pub tti: u64,
}

impl SymbolDelays {
    pub fn from_config(cfg: &SimConfig) -> Self {
        let p = &cfg.processing;
        SymbolDelays {
            pdsch_prep: symbols_ceil(p.pdsch_prep),
            pusch_prep: symbols_ceil(p.pusch_prep),
            pdsch_decode: symbols_ceil(p.pdsch_decode),
            pusch_decode: symbols_ceil(p.pusch_decode),
            tti: cfg.network.tti_symbols as u64,
        }
    }

    /// Shortest possible arrival-to-delivery time in each direction.
    pub fn min_latency(&self, direction: Direction) -> u64 {
        match direction {
            Direction::Dl => self.pdsch_prep + self.tti + self.pdsch_decode,
            Direction::Ul => self.pusch_prep + self.tti + self.pusch_decode,
        }
    }
}

pub struct Simulation {
    cfg: SimConfig,
    seed: u64,
    clock: Clock,
    delays: SymbolDelays,
    shape: FrameShape,
    horizon: u64,
    warmup: u64,
    queue: EventQueue,
    topology: Topology,
    links: LinkMatrix,
    table: McsTable,
    cg: CgConfig,
    pc: PowerControlConfig,
    sched_params: SchedParams,
    sinr_model: interference::SinrModel,
    bs_psd_mw: f64,
    cells: Vec<CellState>,
    ues: Vec<UeState>,
    packets: HashMap<PacketId, PacketRecord>,
    harq: BTreeMap<u64, HarqProcess>,
    next_packet: PacketId,
    next_harq: u64,
    rng_decode: ChaCha8Rng,
    rng_cg: ChaCha8Rng,
    selector: Box<dyn FrameSelector>,
    counters: Counters,
    samples: Vec<LatencySample>,
    frames: Vec<FrameLogRow>,
    sched_log: Vec<SchedLogRow>,
    trace: BTreeMap<PacketId, TraceRow>,
    emitted: Option<Vec<EngineEvent>>,
}

impl Simulation {
    /// Builds the network for `seed` and queues the initial events.
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let net = &cfg.network;
        let clock = Clock::new(net);
        let horizon = cfg.sim.horizon_frames * clock.symbols_per_frame();
        let warmup = cfg.sim.warmup_frames * clock.symbols_per_frame();
        let horizon_s = clock.seconds(horizon);

        let topology = build_topology(net, &cfg.traffic, &mut stream(seed, STREAM_TOPOLOGY));
        let links = build_link_matrix(&topology, net.carrier_freq_ghz, &cfg.channel.pathloss, &mut stream(seed, STREAM_LINKS));

        let prb_bw = net.prb_bandwidth_hz();
        let sinr_model = interference::SinrModel {
            desired_gain: db_to_lin(cfg.channel.desired_array_gain_db),
            interference_gain: db_to_lin(cfg.channel.interference_array_gain_db),
            irc_factor: db_to_lin(-cfg.channel.irc_gain_db),
            noise_ue_mw: db_to_lin(noise_dbm(prb_bw, cfg.channel.ue_noise_figure_db)),
            noise_bs_mw: db_to_lin(noise_dbm(prb_bw, cfg.channel.bs_noise_figure_db)),
        };
        let bs_psd_mw = db_to_lin(net.bs_power_dbm) / net.prbs as f64;

        let shape = FrameShape {
            n_ttis: net.ttis_per_frame(),
            tti_symbols: net.tti_symbols,
            min_dl: cfg.tdd.min_dl_ttis,
            min_ul: cfg.tdd.min_ul_ttis,
        };
        let neutral = crate::tdd::build_frame(crate::tdd::NEUTRAL_RATIO, &shape);

        let t = &cfg.traffic;
        let k = t.ues_per_cell();
        let n_bins = (horizon - warmup).div_ceil(cfg.sim.throughput_bin_frames * clock.symbols_per_frame()) as usize;
        let cqi_period = ((cfg.mac.cqi_period_ms * 1e-3) / clock.seconds(1)).round().max(1.0) as u64;
        let cqi_delay = cfg.mac.cqi_delay_ttis as u64 * net.tti_symbols as u64;

        let mut cells: Vec<CellState> = (0..net.num_cells)
            .map(|_| CellState {
                frame: neutral.clone(),
                observations: Vec::new(),
                bler: CellBlerTracker::new(0, cfg.tdd.iota_window, cfg.tdd.iota_min),
                dl_ues: Vec::new(),
                ul_ues: Vec::new(),
                urllc_configured: false,
                pending_nacks: Vec::new(),
                pending_grants: Vec::new(),
                dl_retx: Vec::new(),
            })
            .collect();

        let mut ues = Vec::with_capacity(topology.num_ues());
        for (id, &cell) in topology.cell_of_ue.iter().enumerate() {
            let local = id % k;
            let (direction, service) = if local < t.k_embb_dl {
                (Direction::Dl, Service::Embb)
            } else if local < t.k_dl {
                (Direction::Dl, Service::Urllc)
            } else {
                (Direction::Ul, Service::Urllc)
            };
            let mut rng = stream(seed, STREAM_TRAFFIC + id as u64);
            let (source, pkt_bits) = match (direction, service) {
                (Direction::Dl, Service::Embb) => {
                    let period = t.embb_pkt_bits as f64 / t.embb_rate_bps;
                    let phase = rng.random::<f64>() * period;
                    (Source::Cbr(CbrArrivals::new(t.embb_pkt_bits, t.embb_rate_bps, horizon_s, Some(phase))), t.embb_pkt_bits)
                }
                (Direction::Dl, Service::Urllc) => {
                    (Source::Poisson(PoissonArrivals::new(t.lambda_dl, horizon_s, rng)), t.urllc_pkt_dl_bits)
                }
                _ => (Source::Poisson(PoissonArrivals::new(t.lambda_ul, horizon_s, rng)), t.urllc_pkt_ul_bits),
            };
            let ue_node = links.ue_node(id);
            let c = &mut cells[cell];
            let ul_index = if direction == Direction::Ul {
                c.ul_ues.push(id);
                c.ul_ues.len() - 1
            } else {
                c.dl_ues.push(id);
                0
            };
            if service == Service::Urllc {
                c.urllc_configured = true;
            }
            // Geometry SINR: every other BS at full power.
            let signal = bs_psd_mw * links.gain_lin(links.bs_node(cell), ue_node) * sinr_model.desired_gain;
            let interference: f64 = (0..net.num_cells)
                .filter(|&o| o != cell)
                .map(|o| bs_psd_mw * links.gain_lin(links.bs_node(o), ue_node) * sinr_model.interference_gain * sinr_model.irc_factor)
                .sum();
            let geometry_db = lin_to_db(signal / (sinr_model.noise_ue_mw + interference));
            ues.push(UeState {
                cell,
                direction,
                service,
                pkt_bits,
                buffer: UeBuffer::new(),
                source,
                weight: match service {
                    Service::Urllc => cfg.mac.urllc_weight,
                    Service::Embb => cfg.mac.embb_weight,
                },
                avg_throughput: AVG_FLOOR,
                cqi: CqiTracker::new(geometry_db, cqi_period, cqi_delay),
                ul_retx: Vec::new(),
                ul_index,
                coupling_loss_db: -links.gain_db(ue_node, links.bs_node(cell)),
                delivered_bits: 0,
                bins: vec![0; n_bins],
            });
        }
        for c in &mut cells {
            c.bler = CellBlerTracker::new(c.ul_ues.len(), cfg.tdd.iota_window, cfg.tdd.iota_min);
        }

        let mut sim = Simulation {
            cfg: cfg.clone(),
            seed,
            clock,
            delays: SymbolDelays::from_config(cfg),
            shape,
            horizon,
            warmup,
            queue: EventQueue::new(),
            topology,
            links,
            table: McsTable::default(),
            cg: CgConfig::from_mac(&cfg.mac),
            pc: cfg.mac.power_control(net),
            sched_params: SchedParams {
                total_prbs: net.prbs,
                control_overhead_prbs: cfg.mac.control_overhead_prbs,
                pf_forgetting: cfg.mac.pf_forgetting,
                pf_chunk_prbs: cfg.mac.pf_chunk_prbs,
                tti_duration_s: net.tti_duration_s(),
            },
            sinr_model,
            bs_psd_mw,
            cells,
            ues,
            packets: HashMap::new(),
            harq: BTreeMap::new(),
            next_packet: 0,
            next_harq: 0,
            rng_decode: stream(seed, STREAM_DECODE),
            rng_cg: stream(seed, STREAM_CG),
            selector: Box::new(BufferRatioSelector { mode: cfg.tdd.mode }),
            counters: Counters::default(),
            samples: Vec::new(),
            frames: Vec::new(),
            sched_log: Vec::new(),
            trace: BTreeMap::new(),
            emitted: None,
        };
        sim.queue.push(0, Event::FrameBoundary);
        sim.queue.push(0, Event::TxStart);
        sim.queue.push(sim.clock.symbols_per_slot as u64, Event::SlotSample);
        for ue in 0..sim.ues.len() {
            sim.schedule_next_arrival(ue);
        }
        Ok(sim)
    }

    /// Replaces the frame selection policy.
    pub fn with_selector(mut self, selector: Box<dyn FrameSelector>) -> Self {
        self.selector = selector;
        self
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn horizon_symbols(&self) -> u64 {
        self.horizon
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn links(&self) -> &LinkMatrix {
        &self.links
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn frame(&self, bs: usize) -> &FrameConfig {
        &self.cells[bs].frame
    }

    pub fn samples(&self) -> &[LatencySample] {
        &self.samples
    }

    pub fn delays(&self) -> SymbolDelays {
        self.delays
    }

    /// Queues one extra packet for `ue` at `symbol`, outside its traffic model.
    pub fn inject_packet(&mut self, ue: usize, symbol: u64, bits: u32) {
        self.queue.push(symbol, Event::Arrival { ue, bits, injected: true });
    }

    fn schedule_next_arrival(&mut self, ue: usize) {
        let u = &mut self.ues[ue];
        if let Some(t) = u.source.next() {
            let sym = self.clock.symbol_at(t);
            if sym < self.horizon {
                let bits = u.pkt_bits;
                self.queue.push(sym, Event::Arrival { ue, bits, injected: false });
            }
        }
    }

    fn emit(&mut self, e: EngineEvent) {
        if let Some(v) = self.emitted.as_mut() {
            v.push(e);
        }
    }

    /// Handles every event at the current symbol, then moves the clock on by
    /// one symbol. Returns what happened.
    pub fn advance_symbol(&mut self) -> Result<Vec<EngineEvent>, SimError> {
        self.emitted = Some(Vec::new());
        let s = self.clock.symbol_index;
        let r = self.process_symbol(s);
        self.clock.symbol_index += 1;
        let out = self.emitted.take().unwrap_or_default();
        r.map(|_| out)
    }

    /// Runs to the horizon and collects the outputs.
    pub fn run(mut self) -> Result<RunOutput, SimError> {
        self.run_until(self.horizon)?;
        Ok(self.finish())
    }

    /// Processes every event strictly before `end` (capped at the horizon).
    pub fn run_until(&mut self, end: u64) -> Result<(), SimError> {
        let end = end.min(self.horizon);
        while let Some(t) = self.queue.peek_time() {
            if t >= end {
                break;
            }
            self.clock.symbol_index = t;
            self.process_symbol(t)?;
        }
        self.clock.symbol_index = end;
        Ok(())
    }

    fn process_symbol(&mut self, s: u64) -> Result<(), SimError> {
        if s >= self.horizon {
            return Ok(());
        }
        while let Some((t, event)) = self.queue.pop_due(s) {
            debug_assert_eq!(t, s);
            match event {
                Event::DecodeDone { harq, ok } => self.on_decode_done(s, harq, ok)?,
                Event::FeedbackDue { harq } => self.on_feedback(s, harq)?,
                Event::SlotSample => self.on_slot_sample(s),
                Event::FrameBoundary => self.on_frame_boundary(s),
                Event::TxStart => self.on_tx_start(s)?,
                Event::Arrival { ue, bits, injected } => self.on_arrival(s, ue, bits, injected),
            }
        }
        Ok(())
    }

    fn on_arrival(&mut self, s: u64, ue: usize, bits: u32, injected: bool) {
        let id = self.next_packet;
        self.next_packet += 1;
        let u = &mut self.ues[ue];
        u.buffer.enqueue(Packet::new(id, ue, u.direction, u.service, bits, s));
        self.packets.insert(
            id,
            PacketRecord {
                ue,
                direction: u.direction,
                service: u.service,
                size_bits: bits,
                arrival: s,
                decoded_bits: 0,
            },
        );
        self.counters.arrivals += 1;
        if self.cfg.sim.trace_packets {
            self.trace.insert(
                id,
                TraceRow {
                    pkt_id: id,
                    ue,
                    dir: u.direction,
                    service: u.service,
                    bits,
                    arrival_sym: s,
                    delivered_sym: None,
                    dropped: false,
                },
            );
        }
        if !injected {
            self.schedule_next_arrival(ue);
        }
    }

    fn on_slot_sample(&mut self, s: u64) {
        let per_frame = self.clock.symbols_per_frame();
        let slot_index = (((s - 1) % per_frame) / self.clock.symbols_per_slot as u64 + 1) as u32;
        let mut obs: Vec<BufferObservation> = self
            .cells
            .iter()
            .map(|c| BufferObservation {
                slot_index,
                urllc_configured: c.urllc_configured,
                ..Default::default()
            })
            .collect();
        for u in &self.ues {
            if u.direction == Direction::Dl {
                let o = &mut obs[u.cell];
                match u.service {
                    Service::Urllc => o.z_dl_urllc += u.buffer.total_buffered_bits(),
                    Service::Embb => o.z_dl_embb += u.buffer.total_buffered_bits(),
                }
            }
        }
        for p in self.harq.values() {
            let service = self.ues[p.ue].service;
            let o = &mut obs[p.cell];
            let bits = p.bits();
            match (p.direction, p.state) {
                (Direction::Dl, HarqState::AwaitingFeedback | HarqState::AwaitingRetx) => match service {
                    Service::Urllc => o.z_dl_urllc += bits,
                    Service::Embb => o.z_dl_embb += bits,
                },
                // The BS knows about every detected CG payload until it decodes.
                (Direction::Ul, HarqState::AwaitingDecode | HarqState::AwaitingFeedback | HarqState::AwaitingRetx) => {
                    match service {
                        Service::Urllc => o.z_ul_urllc += bits,
                        Service::Embb => o.z_ul_embb += bits,
                    }
                }
                _ => {}
            }
        }
        for (c, o) in self.cells.iter_mut().zip(obs) {
            c.observations.push(o);
        }
        let next = s + self.clock.symbols_per_slot as u64;
        if next <= self.horizon {
            self.queue.push(next, Event::SlotSample);
        }
    }

    fn on_frame_boundary(&mut self, s: u64) {
        let frame_idx = self.clock.frame_of(s);
        for bs in 0..self.cells.len() {
            let obs = std::mem::take(&mut self.cells[bs].observations);
            let iota = self.cells[bs].bler.iota();
            let frame = self.selector.select(bs, &obs, iota, &self.shape);
            if self.cfg.sim.log_frames {
                self.frames.push(FrameLogRow {
                    frame_idx,
                    bs,
                    mu_bar: frame.mu_bar,
                    dl_fraction: frame.dl_fraction,
                    pattern: frame.pattern_string(),
                });
            }
            self.emit(EngineEvent::FrameSelected {
                bs,
                frame: frame_idx,
                dl_fraction: frame.dl_fraction,
            });
            self.cells[bs].frame = frame;
        }
        let next = s + self.clock.symbols_per_frame();
        if next < self.horizon {
            self.queue.push(next, Event::FrameBoundary);
        }
    }

    fn assertion(&self, s: u64, message: String) -> SimError {
        SimError::Assertion { symbol: s, message }
    }

    fn on_tx_start(&mut self, s: u64) -> Result<(), SimError> {
        let tti = self.clock.tti_in_frame(s);
        let mut active: Vec<ActiveTx> = Vec::new();
        let mut receptions: Vec<Reception> = Vec::new();
        let mut dl_cells = Vec::new();
        for c in 0..self.cells.len() {
            let frame = &self.cells[c].frame;
            let data_symbols = frame.data_symbols(tti);
            if frame.has_guard(tti) {
                let guard = s + self.clock.tti_symbols as u64 - 1;
                if s + data_symbols as u64 > guard {
                    self.counters.guard_violations += 1;
                    return Err(self.assertion(s, format!("cell {c} transmits over its guard symbol")));
                }
            }
            match frame.direction(tti) {
                Direction::Dl => {
                    dl_cells.push(c);
                    self.dl_tti(s, c, data_symbols, &mut active, &mut receptions)?;
                }
                Direction::Ul => self.ul_tti(s, c, data_symbols, &mut active, &mut receptions)?,
            }
        }

        // Channel quality measurement by every DL UE of a DL cell. Reference
        // signals make every BS in a DL TTI a full-band interferer whether or
        // not it carries data; UL UEs of other cells add UE-UE CLI.
        let full = 0..self.cfg.network.prbs;
        let mut measured: Vec<ActiveTx> = dl_cells
            .iter()
            .map(|&c| ActiveTx {
                node: self.links.bs_node(c),
                cell: c,
                direction: Direction::Dl,
                prbs: full.clone(),
                psd_mw: self.bs_psd_mw,
            })
            .collect();
        measured.extend(active.iter().filter(|a| a.direction == Direction::Ul).cloned());
        for &c in &dl_cells {
            let bs_node = self.links.bs_node(c);
            let intf = cross_link_interferers(&measured, None, c, Direction::Dl, &full);
            for i in 0..self.cells[c].dl_ues.len() {
                let ue = self.cells[c].dl_ues[i];
                let sinr = interference::reception_sinr(
                    &self.links,
                    &measured,
                    bs_node,
                    self.bs_psd_mw,
                    self.links.ue_node(ue),
                    Direction::Dl,
                    &full,
                    &intf,
                    &self.sinr_model,
                );
                self.ues[ue].cqi.observe(s, lin_to_db(sinr));
            }
        }

        let end = s + self.clock.tti_symbols as u64;
        for r in &receptions {
            let tx = &active[r.desired_tx];
            let intf = cross_link_interferers(&active, Some(r.desired_tx), r.cell, r.direction, &r.prbs);
            self.counters.receptions += 1;
            if intf.iter().any(|i| i.kind.is_cross_link()) {
                self.counters.cli_receptions += 1;
            }
            if intf.iter().any(|i| i.kind == InterfererKind::IntraCellCollision) {
                self.counters.cg_collisions += 1;
            }
            let sinr = interference::reception_sinr(
                &self.links,
                &active,
                tx.node,
                tx.psd_mw,
                r.rx_node,
                r.direction,
                &r.prbs,
                &intf,
                &self.sinr_model,
            );
            let proc = self.harq.get_mut(&r.harq).expect("reception of a live process");
            let combined_db = proc.combine(sinr);
            let p_err = bler(combined_db, self.table.get(proc.mcs));
            let ok = self.rng_decode.random::<f64>() >= p_err;
            let decode = match r.direction {
                Direction::Dl => self.delays.pdsch_decode,
                Direction::Ul => self.delays.pusch_decode,
            };
            self.queue.push(end + decode, Event::DecodeDone { harq: r.harq, ok });
        }

        if end < self.horizon {
            self.queue.push(end, Event::TxStart);
        }
        Ok(())
    }

    fn dl_tti(
        &mut self,
        s: u64,
        c: usize,
        data_symbols: u32,
        active: &mut Vec<ActiveTx>,
        receptions: &mut Vec<Reception>,
    ) -> Result<(), SimError> {
        let tti_end = s + self.clock.tti_symbols as u64;
        // UL retransmission grants ride on this DL TTI.
        let cell = &mut self.cells[c];
        let mut i = 0;
        while i < cell.pending_grants.len() {
            if cell.pending_grants[i].0 <= s {
                let (_, id) = cell.pending_grants.remove(i);
                self.queue.push(tti_end, Event::FeedbackDue { harq: id });
            } else {
                i += 1;
            }
        }

        let mut due: Vec<(u64, u64)> = cell
            .dl_retx
            .iter()
            .map(|id| (self.harq[id].next_action_time, *id))
            .filter(|&(t, _)| t <= s)
            .collect();
        due.sort_unstable();
        let retx: Vec<RetxRequest> = due
            .iter()
            .map(|&(_, id)| {
                let p = &self.harq[&id];
                RetxRequest {
                    harq_id: id,
                    ue: p.ue,
                    service: self.ues[p.ue].service,
                    prb_count: p.prb_count,
                    mcs: p.mcs,
                }
            })
            .collect();

        let cutoff = s.saturating_sub(self.delays.pdsch_prep);
        let ready = |p: &Packet| p.arrival + self.delays.pdsch_prep <= s;
        let mut cands = Vec::new();
        for &ue in &self.cells[c].dl_ues {
            let u = &self.ues[ue];
            if s < self.delays.pdsch_prep || u.buffer.eligible_bits(cutoff) == 0 {
                continue;
            }
            let packets: Vec<PendingPacket> = u
                .buffer
                .packets()
                .take_while(|p| ready(p))
                .map(|p| PendingPacket {
                    arrival: p.arrival,
                    bits: p.remaining_bits,
                })
                .collect();
            let target = match u.service {
                Service::Urllc => self.cfg.mac.urllc_target_bler,
                Service::Embb => self.cfg.mac.embb_target_bler,
            };
            cands.push((ue, packets, target));
        }
        let cands: Vec<SchedCandidate> = cands
            .into_iter()
            .map(|(ue, packets, target)| {
                let report = self.ues[ue].cqi.report(s);
                let mcs = select_mcs(report, target, &self.table);
                let u = &self.ues[ue];
                SchedCandidate {
                    ue,
                    service: u.service,
                    weight: u.weight,
                    avg_throughput: u.avg_throughput,
                    mcs,
                    bits_per_prb: self.table.bits_per_prb(mcs, data_symbols, self.cfg.mac.re_overhead),
                    packets,
                }
            })
            .collect();

        let mut served: HashMap<usize, u64> = HashMap::new();
        if !(retx.is_empty() && cands.is_empty()) {
            let decision = schedule(
                self.cfg.mac.scheduler,
                self.clock.tti_index(s),
                &retx,
                &cands,
                &self.sched_params,
            );
            if let Err(e) = decision.check(self.sched_params.total_prbs) {
                return Err(self.assertion(s, format!("cell {c}: {e}")));
            }
            if !decision.allocations.is_empty() {
                active.push(ActiveTx {
                    node: self.links.bs_node(c),
                    cell: c,
                    direction: Direction::Dl,
                    prbs: 0..decision.used_prbs(),
                    psd_mw: self.bs_psd_mw,
                });
            }
            let bs_tx = active.len().saturating_sub(1);
            for a in &decision.allocations {
                let id = match a.retx {
                    Some(id) => {
                        self.cells[c].dl_retx.retain(|&x| x != id);
                        self.counters.dl_retransmissions += 1;
                        id
                    }
                    None => {
                        let segments = self.ues[a.ue].buffer.extract_bits(a.bits as u64);
                        let partial = segments.last().is_some_and(|sg| sg.partial);
                        if partial != a.segmented {
                            return Err(self.assertion(s, format!("segmentation mismatch for UE {}", a.ue)));
                        }
                        if a.segmented {
                            self.counters.segmentations += 1;
                        }
                        let id = self.next_harq;
                        self.next_harq += 1;
                        let p = HarqProcess::new(
                            id,
                            Direction::Dl,
                            a.ue,
                            c,
                            segments,
                            a.prb_start,
                            a.prb_count,
                            a.mcs,
                            self.cfg.mac.max_retx,
                        );
                        self.harq.insert(id, p);
                        id
                    }
                };
                let proc = self.harq.get_mut(&id).expect("live process");
                harq_step(proc, HarqEvent::TxDone)?;
                *served.entry(a.ue).or_default() += proc.bits();
                self.counters.dl_transmissions += 1;
                receptions.push(Reception {
                    harq: id,
                    desired_tx: bs_tx,
                    rx_node: self.links.ue_node(a.ue),
                    cell: c,
                    direction: Direction::Dl,
                    prbs: proc.prb_start..proc.prb_start + proc.prb_count,
                });
                if self.cfg.sim.log_sched {
                    self.sched_log.push(SchedLogRow {
                        tti: decision.tti_index,
                        bs: c,
                        ue: a.ue,
                        prbs: a.prb_count,
                        mcs: a.mcs,
                        segmented: a.segmented,
                        service: a.service,
                    });
                }
            }
            self.emit(EngineEvent::Scheduled { bs: c, decision });
        }

        let beta = self.cfg.mac.pf_forgetting;
        let tti_s = self.sched_params.tti_duration_s;
        for i in 0..self.cells[c].dl_ues.len() {
            let ue = self.cells[c].dl_ues[i];
            let bits = served.get(&ue).copied().unwrap_or(0);
            let u = &mut self.ues[ue];
            u.avg_throughput = update_avg_throughput(u.avg_throughput, bits, tti_s, beta);
        }
        Ok(())
    }

    fn ul_tti(
        &mut self,
        s: u64,
        c: usize,
        data_symbols: u32,
        active: &mut Vec<ActiveTx>,
        receptions: &mut Vec<Reception>,
    ) -> Result<(), SimError> {
        let tti_end = s + self.clock.tti_symbols as u64;
        let cell = &mut self.cells[c];
        let mut i = 0;
        while i < cell.pending_nacks.len() {
            if cell.pending_nacks[i].0 <= s {
                let (_, id) = cell.pending_nacks.remove(i);
                self.queue.push(tti_end, Event::FeedbackDue { harq: id });
            } else {
                i += 1;
            }
        }

        let bs_node = self.links.bs_node(c);
        for k in 0..self.cells[c].ul_ues.len() {
            let ue = self.cells[c].ul_ues[k];
            let due = self.ues[ue]
                .ul_retx
                .iter()
                .map(|id| (self.harq[id].next_action_time, *id))
                .filter(|&(t, _)| t <= s)
                .min();
            let id = if let Some((_, id)) = due {
                self.ues[ue].ul_retx.retain(|&x| x != id);
                let proc = self.harq.get_mut(&id).expect("live process");
                proc.power_dbm = retx_power(&self.pc, proc.power_dbm);
                self.counters.ul_retransmissions += 1;
                self.emit(EngineEvent::UlTransmission { ue, bs: c, retx: true });
                id
            } else {
                let u = &mut self.ues[ue];
                let Some(head) = u.buffer.head() else { continue };
                if head.arrival + self.delays.pusch_prep > s {
                    continue;
                }
                let (packet, bits) = (head.id, head.remaining_bits);
                let Some(tx) = cg_transmit(
                    &self.cg,
                    &self.pc,
                    &self.table,
                    self.cfg.mac.re_overhead,
                    data_symbols,
                    ue,
                    packet,
                    bits,
                    u.coupling_loss_db,
                    &mut self.rng_cg,
                ) else {
                    return Err(self.assertion(s, format!("UL packet {packet} of {bits} bits exceeds the CG sub-band")));
                };
                let segments = u.buffer.extract_bits(bits as u64);
                let id = self.next_harq;
                self.next_harq += 1;
                let mut p = HarqProcess::new(
                    id,
                    Direction::Ul,
                    ue,
                    c,
                    segments,
                    tx.prbs.start,
                    tx.prbs.len() as u32,
                    tx.mcs,
                    self.cfg.mac.max_retx,
                );
                p.power_dbm = tx.power_dbm;
                self.harq.insert(id, p);
                self.emit(EngineEvent::UlTransmission { ue, bs: c, retx: false });
                id
            };
            let proc = self.harq.get_mut(&id).expect("live process");
            harq_step(proc, HarqEvent::TxDone)?;
            let power = proc.power_dbm;
            if !(MIN_SANE_POWER_DBM..=self.pc.sigma_max_dbm + 1e-9).contains(&power) {
                self.counters.power_violations += 1;
                return Err(self.assertion(s, format!("UE {ue} transmit power {power} dBm out of range")));
            }
            let prbs = proc.prb_start..proc.prb_start + proc.prb_count;
            self.counters.ul_transmissions += 1;
            active.push(ActiveTx {
                node: self.links.ue_node(ue),
                cell: c,
                direction: Direction::Ul,
                psd_mw: db_to_lin(power) / prbs.len() as f64,
                prbs: prbs.clone(),
            });
            receptions.push(Reception {
                harq: id,
                desired_tx: active.len() - 1,
                rx_node: bs_node,
                cell: c,
                direction: Direction::Ul,
                prbs,
            });
        }
        Ok(())
    }

    fn on_decode_done(&mut self, s: u64, id: u64, ok: bool) -> Result<(), SimError> {
        let mut proc = self.harq.remove(&id).ok_or_else(|| self.assertion(s, format!("decode of unknown process {id}")))?;
        let first = proc.tx_count == 1;
        let action = harq_step(&mut proc, if ok { HarqEvent::DecodeOk } else { HarqEvent::DecodeFail })?;
        if proc.direction == Direction::Ul && first {
            let idx = self.ues[proc.ue].ul_index;
            self.cells[proc.cell].bler.record(idx, !ok);
        }
        match action {
            HarqAction::Deliver => {
                for seg in &proc.segments {
                    self.credit(s, seg.packet, seg.bits)?;
                }
            }
            HarqAction::SendFeedback => {
                let cell = &mut self.cells[proc.cell];
                match proc.direction {
                    Direction::Dl => cell.pending_nacks.push((s + self.delays.pusch_prep, id)),
                    Direction::Ul => cell.pending_grants.push((s + self.delays.pdsch_prep, id)),
                }
                self.harq.insert(id, proc);
            }
            HarqAction::Drop => {
                for seg in &proc.segments {
                    self.drop_packet(s, seg.packet);
                }
            }
            HarqAction::None | HarqAction::ScheduleRetx => {
                return Err(self.assertion(s, format!("unexpected {action:?} after decoding")));
            }
        }
        Ok(())
    }

    fn on_feedback(&mut self, s: u64, id: u64) -> Result<(), SimError> {
        let proc = self.harq.get_mut(&id).expect("feedback for a live process");
        let event = match proc.direction {
            Direction::Dl => HarqEvent::FeedbackDelivered,
            Direction::Ul => HarqEvent::GrantDelivered,
        };
        harq_step(proc, event)?;
        match proc.direction {
            Direction::Dl => {
                proc.next_action_time = s + self.delays.pdsch_prep;
                self.cells[proc.cell].dl_retx.push(id);
            }
            Direction::Ul => {
                proc.next_action_time = s + self.delays.pusch_prep;
                self.ues[proc.ue].ul_retx.push(id);
            }
        }
        Ok(())
    }

    fn measured(&self, arrival: u64) -> bool {
        arrival >= self.warmup
    }

    fn credit(&mut self, s: u64, packet: PacketId, bits: u32) -> Result<(), SimError> {
        let Some(rec) = self.packets.get_mut(&packet) else {
            // The packet was dropped through another transport block.
            return Ok(());
        };
        rec.decoded_bits += bits;
        let ue = rec.ue;
        if s >= self.warmup {
            let bin_symbols = self.cfg.sim.throughput_bin_frames * self.clock.symbols_per_frame();
            let u = &mut self.ues[ue];
            u.delivered_bits += bits as u64;
            let b = ((s - self.warmup) / bin_symbols) as usize;
            if let Some(slot) = u.bins.get_mut(b) {
                *slot += bits as u64;
            }
        }
        if rec.decoded_bits < rec.size_bits {
            return Ok(());
        }
        let rec = self.packets.remove(&packet).expect("present");
        let latency = s - rec.arrival;
        if latency < self.delays.min_latency(rec.direction) {
            self.counters.causality_violations += 1;
            return Err(self.assertion(s, format!("packet {packet} delivered after {latency} symbols")));
        }
        self.counters.delivered += 1;
        if self.measured(rec.arrival) {
            self.samples.push(LatencySample {
                ue,
                service: rec.service,
                direction: rec.direction,
                latency_symbols: latency,
                latency_s: self.clock.seconds(latency),
                dropped: false,
            });
        }
        if let Some(t) = self.trace.get_mut(&packet) {
            t.delivered_sym = Some(s);
        }
        self.emit(EngineEvent::Delivered {
            packet,
            ue,
            latency_symbols: latency,
        });
        Ok(())
    }

    fn drop_packet(&mut self, s: u64, packet: PacketId) {
        let Some(rec) = self.packets.remove(&packet) else { return };
        self.ues[rec.ue].buffer.purge(packet);
        self.counters.dropped += 1;
        if self.measured(rec.arrival) {
            let latency = s - rec.arrival;
            self.samples.push(LatencySample {
                ue: rec.ue,
                service: rec.service,
                direction: rec.direction,
                latency_symbols: latency,
                latency_s: self.clock.seconds(latency),
                dropped: true,
            });
        }
        if let Some(t) = self.trace.get_mut(&packet) {
            t.dropped = true;
        }
        self.emit(EngineEvent::Dropped { packet, ue: rec.ue });
    }

    /// Collects the report and logs; in-flight packets are counted as such.
    pub fn finish(mut self) -> RunOutput {
        self.counters.in_flight = self.packets.len() as u64;
        let window_s = self.clock.seconds(self.horizon - self.warmup);
        let mut report = SimReport::new(self.cfg.clone(), self.seed);
        report.counters = self.counters;
        report.samples = self.samples;
        report.ue_throughput = self
            .ues
            .iter()
            .enumerate()
            .map(|(ue, u)| UeThroughput {
                seed: self.seed,
                ue,
                cell: u.cell,
                service: u.service,
                direction: u.direction,
                delivered_bits: u.delivered_bits,
                bins: u.bins.clone(),
                window_s,
            })
            .collect();
        RunOutput {
            report,
            frames: self.frames,
            sched_log: self.sched_log,
            trace: self.trace.into_values().collect(),
        }
    }
}

/// Runs one seed of `cfg` to the horizon.
pub fn run(cfg: &SimConfig, seed: u64) -> Result<RunOutput, SimError> {
    Simulation::new(cfg, seed)?.run()
}
