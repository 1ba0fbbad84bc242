//! SINR-to-BLER abstraction.
//!
//! Each MCS carries a logistic error curve centred on its 50 % BLER point.
//! The 50 % points follow a Shannon-gap fit, `10·log10(2^SE − 1) + gap`, and
//! `slope_db` is the SINR step from 50 % down to 10 % BLER. See
//! `docs/phy-abstraction.md`.

use serde::{Deserialize, Serialize};

/// Index of QPSK rate 1/2 in the default table.
pub const QPSK_HALF_MCS: usize = 3;

/// Gap to Shannon capacity at 50 % BLER.
pub const SHANNON_GAP_DB: f64 = 1.0;

/// SINR distance between the 50 % and 10 % BLER points.
pub const DEFAULT_SLOPE_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerCurve {
    pub mcs_id: usize,
    pub name: String,
    /// Information bits per resource element.
    pub spectral_eff: f64,
    pub sinr_50pct_db: f64,
    pub slope_db: f64,
}

impl BlerCurve {
    pub fn shannon_fit(mcs_id: usize, name: &str, spectral_eff: f64) -> Self {
        BlerCurve {
            mcs_id,
            name: name.to_string(),
            spectral_eff,
            sinr_50pct_db: 10.0 * (2f64.powf(spectral_eff) - 1.0).log10() + SHANNON_GAP_DB,
            slope_db: DEFAULT_SLOPE_DB,
        }
    }

    /// Logistic steepness per dB, chosen so BLER(s50 + slope) = 10 %.
    fn rate(&self) -> f64 {
        9f64.ln() / self.slope_db
    }

    /// SINR at which this curve reaches `bler`.
    pub fn sinr_at_bler(&self, bler: f64) -> f64 {
        self.sinr_50pct_db + ((1.0 - bler) / bler).ln() / self.rate()
    }
}

/// Block error probability at `sinr_db` for `curve`.
pub fn bler(sinr_db: f64, curve: &BlerCurve) -> f64 {
    let x = (sinr_db - curve.sinr_50pct_db) * curve.rate();
    // exp overflow saturates to +inf, giving 0; underflow gives 1.
    1.0 / (1.0 + x.exp())
}

/// Ordered MCS table, most robust first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    curves: Vec<BlerCurve>,
}

impl Default for McsTable {
    fn default() -> Self {
        const ENTRIES: [(&str, f64); 15] = [
            ("QPSK 1/8", 0.25),
            ("QPSK 1/4", 0.5),
            ("QPSK 1/3", 2.0 / 3.0),
            ("QPSK 1/2", 1.0),
            ("QPSK 2/3", 4.0 / 3.0),
            ("QPSK 3/4", 1.5),
            ("16QAM 1/2", 2.0),
            ("16QAM 3/5", 2.4),
            ("16QAM 2/3", 8.0 / 3.0),
            ("16QAM 3/4", 3.0),
            ("64QAM 3/5", 3.6),
            ("64QAM 2/3", 4.0),
            ("64QAM 3/4", 4.5),
            ("64QAM 4/5", 4.8),
            ("64QAM 5/6", 5.0),
        ];
        McsTable::new(
            ENTRIES
                .iter()
                .enumerate()
                .map(|(i, &(name, se))| BlerCurve::shannon_fit(i, name, se))
                .collect(),
        )
        .expect("default table is valid")
    }
}

impl McsTable {
    /// Builds a table, checking positive efficiencies and slopes and 50 % points
    /// that rise with spectral efficiency.
    pub fn new(curves: Vec<BlerCurve>) -> Result<Self, String> {
        if curves.is_empty() {
            return Err("empty MCS table".into());
        }
        for c in &curves {
            if !(c.spectral_eff > 0.0 && c.slope_db > 0.0) {
                return Err(format!("MCS {} has a non-positive efficiency or slope", c.mcs_id));
            }
        }
        for w in curves.windows(2) {
            if !(w[1].spectral_eff > w[0].spectral_eff && w[1].sinr_50pct_db > w[0].sinr_50pct_db) {
                return Err(format!("MCS {} is not ordered after {}", w[1].mcs_id, w[0].mcs_id));
            }
        }
        Ok(McsTable { curves })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn get(&self, mcs: usize) -> &BlerCurve {
        &self.curves[mcs]
    }

    pub fn curves(&self) -> &[BlerCurve] {
        &self.curves
    }

    /// Payload bits carried by `prbs` PRBs over `data_symbols` symbols.
    pub fn bits_per_prb(&self, mcs: usize, data_symbols: u32, re_overhead: f64) -> u32 {
        let re = 12.0 * data_symbols as f64 * (1.0 - re_overhead);
        (re * self.curves[mcs].spectral_eff).floor() as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn midpoint_and_asymptotes() {
        let t = McsTable::default();
        let c = t.get(QPSK_HALF_MCS);
        assert_eq!(bler(c.sinr_50pct_db, c), 0.5);
        assert_eq!(bler(1e6, c), 0.0);
        assert_eq!(bler(-1e6, c), 1.0);
    }

    #[test]
    fn qpsk_half_calibration() {
        let c = McsTable::default().get(QPSK_HALF_MCS).clone();
        assert_eq!(c.name, "QPSK 1/2");
        assert_abs_diff_eq!(c.sinr_50pct_db, 1.0, epsilon = 1e-12);
        // 1 / (1 + exp(ln 9)) = 0.1 exactly at 50 % point + slope.
        assert_abs_diff_eq!(bler(2.0, &c), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(c.sinr_at_bler(0.1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bler(c.sinr_at_bler(0.01), &c), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn table_shape() {
        let t = McsTable::default();
        assert_eq!(t.len(), 15);
        assert_eq!(t.get(0).name, "QPSK 1/8");
        assert_eq!(t.get(14).name, "64QAM 5/6");
        assert!(McsTable::new(vec![]).is_err());
        let mut bad = t.curves().to_vec();
        bad.swap(2, 3);
        assert!(McsTable::new(bad).is_err());
    }

    #[test]
    fn bits_per_prb() {
        let t = McsTable::default();
        // 12 subcarriers x 4 symbols x 0.75 x 1 bit.
        assert_eq!(t.bits_per_prb(QPSK_HALF_MCS, 4, 0.25), 36);
        assert_eq!(t.bits_per_prb(QPSK_HALF_MCS, 4, 0.0), 48);
    }

    proptest! {
        #[test]
        fn bler_monotone(s50 in -10.0f64..30.0, slope in 0.05f64..5.0, a in -40.0f64..60.0, d in 0.001f64..10.0) {
            let c = BlerCurve { mcs_id: 0, name: String::new(), spectral_eff: 1.0, sinr_50pct_db: s50, slope_db: slope };
            let (lo, hi) = (bler(a, &c), bler(a + d, &c));
            prop_assert!(hi <= lo);
            prop_assert!((0.0..=1.0).contains(&lo));
            // Strict where the logistic has not saturated.
            if lo > 1e-12 && lo < 1.0 - 1e-12 {
                prop_assert!(hi < lo);
            }
        }
    }
}
