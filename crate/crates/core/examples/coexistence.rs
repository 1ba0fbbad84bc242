//! URLLC/eMBB coexistence: every combination of DL scheduler and frame
//! selection mode on the same seeds.
//!
//! ```text
//! cargo run --release --example coexistence [seeds] [frames]
//! ```

use tddsim::config::load_config;
use tddsim::mac::SchedulerKind;
use tddsim::runner::run_seeds;
use tddsim::tdd::SelectionMode;

fn main() {
    let mut args = std::env::args().skip(1);
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let frames: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/coexistence.toml");
    let mut base = load_config(path).expect("coexistence config");
    base.sim.horizon_frames = frames;
    let seeds: Vec<u64> = (1..=n_seeds).collect();
    let (_, _, omega) = base.traffic.urllc_offered_load();
    println!("URLLC load {:.2} Mbps per cell, {} eMBB UEs per cell", omega / 1e6, base.traffic.k_embb_dl);

    for kind in [SchedulerKind::MinHold, SchedulerKind::Pf] {
        for mode in [SelectionMode::QosAware, SelectionMode::QosUnaware] {
            let mut cfg = base.clone();
            cfg.mac.scheduler = kind;
            cfg.tdd.mode = mode;
            let (report, frames) = run_seeds(&cfg, &seeds).expect("run");
            let rows: Vec<f64> = frames.iter().flat_map(|(_, f)| f.iter().map(|r| r.dl_fraction)).collect();
            let dl_share = rows.iter().sum::<f64>() / rows.len() as f64;
            println!("{kind:?}/{mode:?}: {} | mean DL share {dl_share:.3}", report.summary_line());
        }
    }
}
