//! Frame selection from buffered traffic: the ratio, its frame average and
//! the resulting DL/UL pattern, first by hand and then from a live run.
//!
//! ```text
//! cargo run --release --example frame_selection
//! ```

use tddsim::config::load_config;
use tddsim::engine::run;
use tddsim::tdd::{average_ratio, buffered_ratio, build_frame, qos_filter, BufferObservation, FrameShape, SelectionMode};

fn main() {
    let obs = BufferObservation {
        slot_index: 1,
        z_dl_urllc: 256,
        z_dl_embb: 16_000,
        z_ul_urllc: 256,
        z_ul_embb: 0,
        urllc_configured: true,
    };
    let shape = FrameShape {
        n_ttis: 70,
        tti_symbols: 4,
        min_dl: 1,
        min_ul: 1,
    };
    for mode in [SelectionMode::QosAware, SelectionMode::QosUnaware] {
        let (dl, ul) = qos_filter(&obs, mode);
        for iota in [1.0, 0.1] {
            let mu = buffered_ratio(dl as f64, ul as f64, iota);
            let frame = build_frame(average_ratio(&[mu], 1), &shape);
            println!(
                "{mode:?} iota {iota}: Z=({dl},{ul}) mu {mu:.3} -> {} DL TTIs, {} guards",
                frame.dl_ttis(),
                frame.guard_symbols.len()
            );
            println!("  {}", frame.pattern_string());
        }
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/coexistence.toml");
    let mut cfg = load_config(path).expect("coexistence config");
    cfg.sim.horizon_frames = 20;
    let out = run(&cfg, 1).expect("run");
    println!("\ncell 0, live run:");
    for row in out.frames.iter().filter(|r| r.bs == 0).take(8) {
        println!("frame {:>2} mu_bar {:.3} {}", row.frame_idx, row.mu_bar, row.pattern);
    }
}
