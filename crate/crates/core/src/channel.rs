//! Large-scale channel: InF dense-clutter/high-BS pathloss with lognormal
//! shadowing, the frozen pairwise gain table used for every desired and
//! interfering link, and wideband SINR.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::topology::{Position, Topology};
use crate::{db_to_lin, lin_to_db};

/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Shortest 3-D distance fed to the pathloss formula.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlossParams {
    pub los_a: f64,
    pub los_b: f64,
    pub los_c: f64,
    pub nlos_a: f64,
    pub nlos_b: f64,
    pub nlos_c: f64,
    pub shadowing_sigma_los: f64,
    pub shadowing_sigma_nlos: f64,
    pub clutter_density: f64,
    pub clutter_height_m: f64,
    pub clutter_size_m: f64,
}

impl Default for PathlossParams {
    fn default() -> Self {
        PathlossParams {
            los_a: 31.84,
            los_b: 21.50,
            los_c: 19.00,
            nlos_a: 33.63,
            nlos_b: 21.90,
            nlos_c: 20.00,
            shadowing_sigma_los: 4.3,
            shadowing_sigma_nlos: 4.0,
            clutter_density: 0.6,
            clutter_height_m: 6.0,
            clutter_size_m: 2.0,
        }
    }
}

impl PathlossParams {
    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        let coeffs = [self.los_a, self.los_b, self.los_c, self.nlos_a, self.nlos_b, self.nlos_c];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ConfigError::invalid("channel.pathloss", "coefficients must be finite"));
        }
        if !(self.shadowing_sigma_los >= 0.0 && self.shadowing_sigma_nlos >= 0.0) {
            return Err(ConfigError::invalid("channel.pathloss.shadowing_sigma_los", "sigmas must be >= 0"));
        }
        if !(self.clutter_density > 0.0 && self.clutter_density < 1.0) {
            return Err(ConfigError::invalid("channel.pathloss.clutter_density", "must lie in (0, 1)"));
        }
        if !(self.clutter_size_m > 0.0) || !(self.clutter_height_m >= 0.0) {
            return Err(ConfigError::invalid("channel.pathloss.clutter_size_m", "clutter geometry must be positive"));
        }
        Ok(())
    }

    /// LOS decay distance for a link between antennas at heights `h_a`, `h_b`.
    ///
    /// With one end above the clutter the clutter-free fraction of the path
    /// shrinks by `(h_c - h_low) / (h_high - h_low)`. Both ends above the
    /// clutter gives an unobstructed link (infinite decay distance); both
    /// below uses the bare clutter term.
    pub fn k_dh(&self, h_a: f64, h_b: f64) -> f64 {
        let (low, high) = if h_a <= h_b { (h_a, h_b) } else { (h_b, h_a) };
        let base = -self.clutter_size_m / (1.0 - self.clutter_density).ln();
        if low >= self.clutter_height_m {
            f64::INFINITY
        } else if high <= self.clutter_height_m {
            base
        } else {
            base * (self.clutter_height_m - low) / (high - low)
        }
    }

    pub fn sigma(&self, los: bool) -> f64 {
        if los {
            self.shadowing_sigma_los
        } else {
            self.shadowing_sigma_nlos
        }
    }
}

/// Pathloss in dB: `A + B·log10(d3d) + C·log10(fc)`, with the NLOS value
/// floored at the LOS value. Distances below 1 m are clamped.
pub fn pathloss_db(d3d: f64, fc_ghz: f64, los: bool, p: &PathlossParams) -> f64 {
    let d = d3d.max(MIN_DISTANCE_M);
    let los_pl = p.los_a + p.los_b * d.log10() + p.los_c * fc_ghz.log10();
    if los {
        los_pl
    } else {
        let nlos_pl = p.nlos_a + p.nlos_b * d.log10() + p.nlos_c * fc_ghz.log10();
        nlos_pl.max(los_pl)
    }
}

/// LOS probability `exp(-d2d / k_dh)`.
pub fn los_probability(d2d: f64, k_dh: f64) -> f64 {
    if k_dh.is_infinite() {
        return 1.0;
    }
    (-d2d.max(0.0) / k_dh).exp()
}

/// Thermal noise power over `bandwidth_hz` with the given noise figure.
pub fn noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Wideband SINR in dB given received powers in dBm.
pub fn sinr_db(rx_desired_dbm: f64, interferer_rx_dbm: &[f64], noise_dbm: f64) -> f64 {
    let interference: f64 = interferer_rx_dbm.iter().map(|&p| db_to_lin(p)).sum();
    lin_to_db(db_to_lin(rx_desired_dbm) / (interference + db_to_lin(noise_dbm)))
}

/// Frozen coupling gains between every pair of nodes.
///
/// Node indices: BS `c` is node `c`; UE `u` is node `num_cells + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    n: usize,
    num_bs: usize,
    gain_db: Vec<f64>,
    gain_lin: Vec<f64>,
    los: Vec<bool>,
    /// Pairs closer than [`MIN_DISTANCE_M`] whose distance was clamped.
    pub clamped_links: usize,
}

impl LinkMatrix {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn bs_node(&self, cell: usize) -> usize {
        cell
    }

    pub fn ue_node(&self, ue: usize) -> usize {
        self.num_bs + ue
    }

    #[inline]
    pub fn gain_db(&self, a: usize, b: usize) -> f64 {
        self.gain_db[a * self.n + b]
    }

    #[inline]
    pub fn gain_lin(&self, a: usize, b: usize) -> f64 {
        self.gain_lin[a * self.n + b]
    }

    pub fn is_los(&self, a: usize, b: usize) -> bool {
        self.los[a * self.n + b]
    }

    /// Writes `node_a,node_b,gain_db,los` for every unordered pair.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_a", "node_b", "gain_db", "los"])?;
        for a in 0..self.n {
            for b in a + 1..self.n {
                w.write_record(&[
                    a.to_string(),
                    b.to_string(),
                    format!("{:.4}", self.gain_db(a, b)),
                    (self.is_los(a, b) as u8).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Builds a matrix from explicit node positions.
    pub fn from_positions<R: Rng + ?Sized>(
        positions: &[Position],
        num_bs: usize,
        fc_ghz: f64,
        params: &PathlossParams,
        rng: &mut R,
    ) -> LinkMatrix {
        let n = positions.len();
        let mut gain_db = vec![0.0; n * n];
        let mut los = vec![true; n * n];
        let mut clamped_links = 0;
        let standard = Normal::new(0.0, 1.0).expect("unit normal");
        for a in 0..n {
            for b in a + 1..n {
                let (pa, pb) = (&positions[a], &positions[b]);
                let d2d = pa.distance_2d(pb);
                let d3d = pa.distance_3d(pb);
                if d3d < MIN_DISTANCE_M {
                    clamped_links += 1;
                }
                let p_los = los_probability(d2d, params.k_dh(pa.z, pb.z));
                let is_los = rng.random::<f64>() < p_los;
                let shadow = standard.sample(rng) * params.sigma(is_los);
                let g = -(pathloss_db(d3d, fc_ghz, is_los, params) + shadow);
                gain_db[a * n + b] = g;
                gain_db[b * n + a] = g;
                los[a * n + b] = is_los;
                los[b * n + a] = is_los;
            }
        }
        let gain_lin = gain_db
            .iter()
            .enumerate()
            .map(|(i, &g)| if i / n == i % n { 1.0 } else { db_to_lin(g) })
            .collect();
        LinkMatrix {
            n,
            num_bs,
            gain_db,
            gain_lin,
            los,
            clamped_links,
        }
    }
}

/// Draws LOS state and shadowing for every node pair of a topology.
pub fn build_link_matrix<R: Rng + ?Sized>(
    topology: &Topology,
    fc_ghz: f64,
    params: &PathlossParams,
    rng: &mut R,
) -> LinkMatrix {
    let mut positions = topology.bs_positions.clone();
    positions.extend(topology.ue_positions());
    LinkMatrix::from_positions(&positions, topology.num_cells(), fc_ghz, params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pathloss_at_unit_distance_and_frequency() {
        let p = PathlossParams::default();
        assert_eq!(pathloss_db(1.0, 1.0, true, &p), p.los_a);
        assert_eq!(pathloss_db(1.0, 1.0, false, &p), p.nlos_a);
    }

    #[test]
    fn pathloss_los_20m_hand_value() {
        // 31.84 + 21.5*log10(20) + 19*log10(3.5), evaluated offline.
        let p = PathlossParams::default();
        assert_abs_diff_eq!(pathloss_db(20.0, 3.5, true, &p), 70.149_437_749_43, epsilon = 1e-9);
    }

    #[test]
    fn pathloss_monotone_and_clamped() {
        let p = PathlossParams::default();
        assert!(pathloss_db(40.0, 3.5, true, &p) > pathloss_db(20.0, 3.5, true, &p));
        assert_eq!(pathloss_db(0.2, 3.5, true, &p), pathloss_db(1.0, 3.5, true, &p));
        assert!(pathloss_db(30.0, 3.5, false, &p) >= pathloss_db(30.0, 3.5, true, &p));
    }

    #[test]
    fn los_probability_examples() {
        assert_eq!(los_probability(0.0, 3.0), 1.0);
        assert!(los_probability(1e4, 3.0) < 1e-300);
        assert_abs_diff_eq!(los_probability(10.0, 10.0), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(los_probability(10.0, 10.0), 0.367_879_441, epsilon = 1e-9);
    }

    #[test]
    fn k_dh_geometry() {
        let p = PathlossParams::default();
        // Both antennas above the clutter: unobstructed.
        assert!(p.k_dh(10.0, 10.0).is_infinite());
        let base = -2.0 / (0.4f64).ln();
        assert_abs_diff_eq!(p.k_dh(1.5, 1.5), base, epsilon = 1e-12);
        assert_abs_diff_eq!(p.k_dh(10.0, 1.5), base * 4.5 / 8.5, epsilon = 1e-12);
    }

    #[test]
    fn sinr_examples() {
        assert_abs_diff_eq!(sinr_db(-60.0, &[], -90.0), 30.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sinr_db(-60.0, &[-60.0], -400.0), 0.0, epsilon = 1e-9);
        // 10*log10(1e-9 / (2e-10 + 1e-13)) evaluated by hand.
        let expect = 10.0 * (1e-9f64 / (2e-10 + 1e-13)).log10();
        assert_abs_diff_eq!(sinr_db(-60.0, &[-70.0, -70.0], -100.0), expect, epsilon = 1e-9);
        assert_abs_diff_eq!(expect, 6.987_529_114, epsilon = 1e-6);
    }

    #[test]
    fn noise_examples() {
        assert_eq!(noise_dbm(1.0, 0.0), -174.0);
        assert_abs_diff_eq!(noise_dbm(20e6, 9.0), -91.989_700_043, epsilon = 1e-6);
        assert_abs_diff_eq!(noise_dbm(5e6, 5.0), -102.010_299_957, epsilon = 1e-6);
    }

    fn two_nodes() -> Vec<Position> {
        vec![Position::new(0.0, 0.0, 10.0), Position::new(12.0, 5.0, 1.5)]
    }

    #[test]
    fn two_node_matrix_is_mirrored() {
        let m = LinkMatrix::from_positions(&two_nodes(), 1, 3.5, &PathlossParams::default(), &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(m.gain_db(0, 1), m.gain_db(1, 0));
        assert!(m.gain_db(0, 1) < 0.0);
    }

    #[test]
    fn zero_sigma_gives_exact_pathloss() {
        let p = PathlossParams {
            shadowing_sigma_los: 0.0,
            shadowing_sigma_nlos: 0.0,
            ..Default::default()
        };
        let pos = two_nodes();
        let m = LinkMatrix::from_positions(&pos, 1, 3.5, &p, &mut ChaCha8Rng::seed_from_u64(2));
        let d = pos[0].distance_3d(&pos[1]);
        assert_eq!(m.gain_db(0, 1), -pathloss_db(d, 3.5, m.is_los(0, 1), &p));
    }

    #[test]
    fn csv_dump_lists_pairs() {
        let m = LinkMatrix::from_positions(&two_nodes(), 1, 3.5, &PathlossParams::default(), &mut ChaCha8Rng::seed_from_u64(2));
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node_a,node_b,gain_db,los\n0,1,"));
        assert_eq!(text.lines().count(), 2);
    }

    proptest! {
        #[test]
        fn adding_an_interferer_lowers_sinr(
            desired in -120.0f64..0.0,
            others in proptest::collection::vec(-150.0f64..-20.0, 0..5),
            extra in -150.0f64..-20.0,
            noise in -130.0f64..-80.0,
        ) {
            let before = sinr_db(desired, &others, noise);
            let mut more = others.clone();
            more.push(extra);
            prop_assert!(sinr_db(desired, &more, noise) < before);
        }

        #[test]
        fn pathloss_increases_with_distance(d in 1.0f64..500.0, step in 0.01f64..100.0, los in any::<bool>()) {
            let p = PathlossParams::default();
            prop_assert!(pathloss_db(d + step, 3.5, los, &p) > pathloss_db(d, 3.5, los, &p));
        }

        #[test]
        fn matrix_symmetric_and_deterministic(
            pts in proptest::collection::vec((0.0f64..100.0, 0.0f64..50.0, prop_oneof![Just(1.5), Just(10.0)]), 2..12),
            seed in any::<u64>(),
        ) {
            let pos: Vec<Position> = pts.iter().map(|&(x, y, z)| Position::new(x, y, z)).collect();
            let p = PathlossParams::default();
            let a = LinkMatrix::from_positions(&pos, 1, 3.5, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = LinkMatrix::from_positions(&pos, 1, 3.5, &p, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(&a, &b);
            for i in 0..pos.len() {
                for j in 0..pos.len() {
                    prop_assert_eq!(a.gain_db(i, j), a.gain_db(j, i));
                    if i != j {
                        prop_assert!(a.gain_db(i, j) < 0.0);
                    }
                }
            }
        }
    }
}
