//! MCS selection from delayed, periodic channel quality reports.

use std::collections::VecDeque;

use crate::phy::McsTable;
use crate::{db_to_lin, lin_to_db};

/// Highest-efficiency MCS whose BLER at `sinr_db` is within `target_bler`;
/// the most robust MCS if none qualifies. The boundary is inclusive.
pub fn select_mcs(sinr_db: f64, target_bler: f64, table: &McsTable) -> usize {
    table
        .curves()
        .iter()
        .rposition(|c| sinr_db >= c.sinr_at_bler(target_bler) - 1e-9)
        .unwrap_or(0)
}

/// Per-UE CQI pipeline: SINR is averaged over fixed periods and each average
/// becomes the usable report `delay` symbols after its period ends.
///
/// The average is harmonic in linear SINR. With a static desired signal that
/// is the SINR of the mean interference-plus-noise power, so rare quiet
/// measurements do not inflate the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CqiTracker {
    period: u64,
    delay: u64,
    period_end: u64,
    sum_inv: f64,
    count: u32,
    pending: VecDeque<(u64, f64)>,
    report_db: f64,
}

impl CqiTracker {
    pub fn new(initial_db: f64, period_symbols: u64, delay_symbols: u64) -> Self {
        assert!(period_symbols > 0);
        CqiTracker {
            period: period_symbols,
            delay: delay_symbols,
            period_end: period_symbols,
            sum_inv: 0.0,
            count: 0,
            pending: VecDeque::new(),
            report_db: initial_db,
        }
    }

    fn roll(&mut self, now: u64) {
        while now >= self.period_end {
            if self.count > 0 {
                let avg = lin_to_db(self.count as f64 / self.sum_inv);
                self.pending.push_back((self.period_end + self.delay, avg));
            }
            self.sum_inv = 0.0;
            self.count = 0;
            self.period_end += self.period;
        }
        while let Some(&(at, v)) = self.pending.front() {
            if at > now {
                break;
            }
            self.report_db = v;
            self.pending.pop_front();
        }
    }

    /// Records an SINR measurement taken at symbol `now`.
    pub fn observe(&mut self, now: u64, sinr_db: f64) {
        self.roll(now);
        self.sum_inv += db_to_lin(-sinr_db);
        self.count += 1;
    }

    /// The report usable by the scheduler at symbol `now`.
    pub fn report(&mut self, now: u64) -> f64 {
        self.roll(now);
        self.report_db
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::QPSK_HALF_MCS;
    use proptest::prelude::*;

    #[test]
    fn asymptotes() {
        let t = McsTable::default();
        assert_eq!(select_mcs(1e3, 0.01, &t), t.len() - 1);
        assert_eq!(select_mcs(-50.0, 0.01, &t), 0);
    }

    #[test]
    fn boundary_is_inclusive() {
        let t = McsTable::default();
        for target in [0.01, 0.1] {
            let s = t.get(QPSK_HALF_MCS).sinr_at_bler(target);
            assert_eq!(select_mcs(s, target, &t), QPSK_HALF_MCS);
            assert_eq!(select_mcs(s - 1e-6, target, &t), QPSK_HALF_MCS - 1);
        }
    }

    #[test]
    fn cqi_period_and_staleness() {
        let mut c = CqiTracker::new(5.0, 140, 8);
        c.observe(10, 10.0);
        c.observe(20, 10.0);
        assert_eq!(c.report(139), 5.0);
        // Period closes at 140, report usable from 148.
        assert_eq!(c.report(147), 5.0);
        assert!((c.report(148) - 10.0).abs() < 1e-12);
        // An empty period keeps the last report.
        assert!((c.report(1000) - 10.0).abs() < 1e-12);
        // Harmonic averaging: 0 dB and 10 dB give 10·log10(2 / 1.1).
        c.observe(1001, 0.0);
        c.observe(1002, 10.0);
        assert!((c.report(1120 + 8) - (2.0f64 / 1.1).log10() * 10.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn selected_mcs_meets_target(sinr in -20.0f64..40.0, target in 0.001f64..0.5) {
            let t = McsTable::default();
            let m = select_mcs(sinr, target, &t);
            if m > 0 || sinr >= t.get(0).sinr_at_bler(target) {
                prop_assert!(crate::phy::bler(sinr, t.get(m)) <= target * (1.0 + 1e-6));
            }
            if m + 1 < t.len() {
                prop_assert!(crate::phy::bler(sinr, t.get(m + 1)) > target);
            }
            prop_assert!(select_mcs(sinr + 1.0, target, &t) >= m);
        }
    }
}
