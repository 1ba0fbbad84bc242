//! One seed of the calibrated factory hall: summary line, per-direction
//! tails and a coarse latency CCDF.
//!
//! ```text
//! cargo run --release --example single_run [seed] [frames]
//! ```

use tddsim::config::load_config;
use tddsim::engine::run;
use tddsim::metrics::{ccdf, outage_latency};
use tddsim::{Direction, Service};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let frames: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/calibrated.toml");
    let mut cfg = load_config(path).expect("calibrated config");
    cfg.sim.horizon_frames = frames;

    let out = run(&cfg, seed).expect("run");
    let report = &out.report;
    println!("{}", report.summary_line());
    println!("{:?}", report.counters);

    for dir in [Direction::Dl, Direction::Ul] {
        let samples = report.samples_of(Service::Urllc, Some(dir));
        for r in [0.99, 0.999] {
            let o = outage_latency(&samples, r);
            println!(
                "{} outage latency at {r}: {} ms ({} samples{})",
                dir.as_str(),
                o.latency.display_ms(),
                o.samples,
                if o.low_confidence { ", low confidence" } else { "" }
            );
        }
    }

    let lat = report.latencies(Service::Urllc, None);
    println!("latency_ms  P(latency > x)");
    let points = ccdf(&lat);
    for &(x, p) in points.iter().step_by((points.len() / 12).max(1)) {
        println!("{:>9.4}  {p:.2e}", x * 1e3);
    }
}
