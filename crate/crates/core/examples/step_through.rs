//! Stepping the engine one symbol at a time: a single DL and a single UL
//! packet in an otherwise idle cell, printing every engine event.
//!
//! ```text
//! cargo run --release --example step_through
//! ```

use tddsim::engine::{EngineEvent, Simulation};
use tddsim::SimConfig;

fn main() {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 1;
    cfg.network.grid_rows = 1;
    cfg.network.grid_cols = 1;
    cfg.network.hall_length_m = 20.0;
    cfg.network.hall_width_m = 20.0;
    cfg.traffic.k_dl = 1;
    cfg.traffic.k_ul = 1;
    cfg.traffic.lambda_dl = 0.0;
    cfg.traffic.lambda_ul = 0.0;
    cfg.sim.horizon_frames = 1;
    cfg.sim.warmup_frames = 0;

    let mut sim = Simulation::new(&cfg, 1).expect("config");
    let d = sim.delays();
    println!("delays in symbols: {d:?}");
    // UE 0 is the DL UE, UE 1 the UL UE.
    sim.inject_packet(0, 5, 256);
    sim.inject_packet(1, 6, 256);

    let mut delivered = 0;
    while delivered < 2 {
        let s = sim.clock().symbol_index;
        for e in sim.advance_symbol().expect("step") {
            match &e {
                EngineEvent::FrameSelected { .. } | EngineEvent::Scheduled { .. } | EngineEvent::UlTransmission { .. } => {
                    println!("symbol {s:>3}: {e:?}")
                }
                EngineEvent::Delivered { ue, latency_symbols, .. } => {
                    delivered += 1;
                    println!("symbol {s:>3}: UE {ue} delivered after {latency_symbols} symbols");
                }
                EngineEvent::Dropped { ue, .. } => println!("symbol {s:>3}: UE {ue} dropped"),
            }
        }
    }
}
