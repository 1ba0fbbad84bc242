//! Hall layout and link budget: coupling-loss percentiles of the serving
//! links and the share of UL UEs capped at maximum power for a range of P0.
//!
//! ```text
//! cargo run --release --example link_budget [seed]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tddsim::channel::build_link_matrix;
use tddsim::mac::{ul_tx_power, PowerControlConfig};
use tddsim::metrics::quantile;
use tddsim::topology::build_topology;
use tddsim::SimConfig;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SimConfig::default();
    let topo = build_topology(&cfg.network, &cfg.traffic, &mut ChaCha8Rng::seed_from_u64(seed));
    let links = build_link_matrix(
        &topo,
        cfg.network.carrier_freq_ghz,
        &cfg.channel.pathloss,
        &mut ChaCha8Rng::seed_from_u64(seed + 1),
    );

    let serving: Vec<f64> = topo
        .cell_of_ue
        .iter()
        .enumerate()
        .map(|(ue, &c)| -links.gain_db(links.ue_node(ue), links.bs_node(c)))
        .collect();
    let bs_bs: Vec<f64> = (0..topo.num_cells())
        .flat_map(|a| (0..topo.num_cells()).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| -links.gain_db(links.bs_node(a), links.bs_node(b)))
        .collect();

    println!("{} cells, {} UEs", topo.num_cells(), topo.num_ues());
    for (name, v) in [("UE-BS serving", &serving), ("BS-BS", &bs_bs)] {
        let q = |p| quantile(v, p).unwrap_or(f64::NAN);
        println!(
            "{name:>14} coupling loss dB: p5={:.1} p50={:.1} p95={:.1}",
            q(0.05),
            q(0.5),
            q(0.95)
        );
    }

    let prbs = cfg.mac.cg_subband_prbs;
    for p0 in [-100.0, -90.0, -80.0, -70.0, -61.0, -50.0, -40.0, -30.0] {
        let pc = PowerControlConfig {
            p0_dbm: p0,
            ..cfg.mac.power_control(&cfg.network)
        };
        let powers: Vec<f64> = serving.iter().map(|&pl| ul_tx_power(&pc, prbs, pl)).collect();
        let capped = powers.iter().filter(|&&p| p >= pc.sigma_max_dbm - 1e-9).count();
        println!(
            "P0={p0:>6.1} dBm: median tx {:.1} dBm, {:.0}% at max power",
            quantile(&powers, 0.5).unwrap_or(f64::NAN),
            100.0 * capped as f64 / powers.len() as f64
        );
    }
}
