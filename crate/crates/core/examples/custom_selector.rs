//! Plugging in a frame selection policy: a selector that follows the
//! buffered-traffic ratio but moves at most a few TTIs per frame, compared
//! with the reactive default and a static 50/50 split.
//!
//! ```text
//! cargo run --release --example custom_selector [frames]
//! ```

use std::collections::HashMap;

use tddsim::config::load_config;
use tddsim::engine::Simulation;
use tddsim::tdd::{
    build_frame, select_frame, BufferObservation, FixedRatioSelector, FrameConfig, FrameSelector, FrameShape,
    SelectionMode,
};

/// Rate-limited version of the buffered-ratio policy.
struct Damped {
    max_step: f64,
    last: HashMap<usize, f64>,
}

impl FrameSelector for Damped {
    fn select(&mut self, bs: usize, observations: &[BufferObservation], iota: f64, shape: &FrameShape) -> FrameConfig {
        let target = select_frame(observations, SelectionMode::QosAware, iota, shape).mu_bar;
        let prev = self.last.get(&bs).copied().unwrap_or(0.5);
        let mu = prev + (target - prev).clamp(-self.max_step, self.max_step);
        self.last.insert(bs, mu);
        build_frame(mu, shape)
    }
}

fn main() {
    let frames: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/calibrated.toml");
    let mut cfg = load_config(path).expect("calibrated config");
    cfg.sim.horizon_frames = frames;
    cfg.traffic.scale_to_offered_load(2e6);

    let policies: Vec<(&str, Box<dyn FrameSelector>)> = vec![
        ("reactive", Box::new(tddsim::tdd::BufferRatioSelector { mode: SelectionMode::QosAware })),
        ("damped", Box::new(Damped { max_step: 0.05, last: HashMap::new() })),
        ("static 0.5", Box::new(FixedRatioSelector { mu_bar: 0.5 })),
    ];
    for (name, selector) in policies {
        let out = Simulation::new(&cfg, 1).expect("config").with_selector(selector).run().expect("run");
        println!("{name:>10}: {}", out.report.summary_line());
    }
}
