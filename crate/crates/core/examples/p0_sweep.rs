//! UL power-control sweep: UL URLLC p99 latency against P0, with several
//! seeds merged per point.
//!
//! ```text
//! cargo run --release --example p0_sweep [seeds] [frames]
//! ```

use tddsim::config::load_config;
use tddsim::runner::run_seeds;
use tddsim::{Direction, Service};

fn main() {
    let mut args = std::env::args().skip(1);
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let frames: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/calibrated.toml");
    let mut base = load_config(path).expect("calibrated config");
    base.sim.horizon_frames = frames;
    let seeds: Vec<u64> = (1..=n_seeds).collect();

    println!("p0_dbm  ul_p50_ms  ul_p99_ms  ul_samples");
    for p0 in [-100.0, -90.0, -80.0, -70.0, -61.0, -50.0, -40.0, -30.0] {
        let mut cfg = base.clone();
        cfg.mac.p0_dbm = p0;
        let (report, _) = run_seeds(&cfg, &seeds).expect("sweep point");
        println!(
            "{p0:>6.1}  {:>9}  {:>9}  {}",
            report.urllc_quantile(Some(Direction::Ul), 0.5).display_ms(),
            report.urllc_quantile(Some(Direction::Ul), 0.99).display_ms(),
            report.latencies(Service::Urllc, Some(Direction::Ul)).len()
        );
    }
}
