//! HARQ state machines.
//!
//! Both directions share one machine shape:
//!
//! ```text
//! Idle --TxDone--> AwaitingDecode --DecodeOk--> Delivered
//!                       |  ^
//!              DecodeFail  TxDone
//!                       v  |
//!        AwaitingFeedback --(Feedback|Grant)Delivered--> AwaitingRetx
//! ```
//!
//! A failure on the last allowed attempt goes straight to `Dropped`. DL
//! processes advance on a NACK reaching the BS, UL processes on a
//! retransmission grant reaching the UE. Retransmissions are chase-combined:
//! the effective SINR is the linear sum over all attempts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traffic::Segment;
use crate::{lin_to_db, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarqState {
    Idle,
    AwaitingDecode,
    AwaitingFeedback,
    AwaitingRetx,
    Delivered,
    Dropped,
}

impl HarqState {
    pub fn is_terminal(self) -> bool {
        matches!(self, HarqState::Delivered | HarqState::Dropped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarqEvent {
    TxDone,
    DecodeOk,
    DecodeFail,
    /// DL: the NACK reached the BS.
    FeedbackDelivered,
    /// UL: the retransmission grant reached the UE.
    GrantDelivered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarqAction {
    None,
    Deliver,
    /// Send a NACK (DL) or a retransmission grant (UL).
    SendFeedback,
    ScheduleRetx,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{direction:?} process {id} got {event:?} in state {state:?}")]
pub struct HarqError {
    pub id: u64,
    pub direction: Direction,
    pub state: HarqState,
    pub event: HarqEvent,
}

/// One transport block in flight, with everything needed to retransmit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarqProcess {
    pub id: u64,
    pub direction: Direction,
    pub ue: usize,
    pub cell: usize,
    pub segments: Vec<Segment>,
    pub state: HarqState,
    pub tx_count: u32,
    pub max_retx: u32,
    /// Earliest symbol at which the pending action may happen.
    pub next_action_time: u64,
    pub prb_start: u32,
    pub prb_count: u32,
    pub mcs: usize,
    /// UL only: power of the latest attempt.
    pub power_dbm: f64,
    pub combined_sinr_lin: f64,
}

impl HarqProcess {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        direction: Direction,
        ue: usize,
        cell: usize,
        segments: Vec<Segment>,
        prb_start: u32,
        prb_count: u32,
        mcs: usize,
        max_retx: u32,
    ) -> Self {
        HarqProcess {
            id,
            direction,
            ue,
            cell,
            segments,
            state: HarqState::Idle,
            tx_count: 0,
            max_retx,
            next_action_time: 0,
            prb_start,
            prb_count,
            mcs,
            power_dbm: f64::NAN,
            combined_sinr_lin: 0.0,
        }
    }

    pub fn bits(&self) -> u64 {
        self.segments.iter().map(|s| s.bits as u64).sum()
    }

    /// Adds one attempt's SINR and returns the combined SINR in dB.
    pub fn combine(&mut self, sinr_lin: f64) -> f64 {
        self.combined_sinr_lin += sinr_lin;
        lin_to_db(self.combined_sinr_lin)
    }

    pub fn combined_sinr_db(&self) -> f64 {
        lin_to_db(self.combined_sinr_lin)
    }

    fn step(&mut self, event: HarqEvent, feedback: HarqEvent) -> Result<HarqAction, HarqError> {
        use HarqState::*;
        let (next, action) = match (self.state, event) {
            (Idle | AwaitingRetx, HarqEvent::TxDone) => {
                self.tx_count += 1;
                (AwaitingDecode, HarqAction::None)
            }
            (AwaitingDecode, HarqEvent::DecodeOk) => (Delivered, HarqAction::Deliver),
            (AwaitingDecode, HarqEvent::DecodeFail) if self.tx_count > self.max_retx => (Dropped, HarqAction::Drop),
            (AwaitingDecode, HarqEvent::DecodeFail) => (AwaitingFeedback, HarqAction::SendFeedback),
            (AwaitingFeedback, e) if e == feedback => (AwaitingRetx, HarqAction::ScheduleRetx),
            (state, event) => {
                return Err(HarqError {
                    id: self.id,
                    direction: self.direction,
                    state,
                    event,
                })
            }
        };
        self.state = next;
        Ok(action)
    }
}

pub fn harq_dl_step(proc: &mut HarqProcess, event: HarqEvent) -> Result<HarqAction, HarqError> {
    debug_assert_eq!(proc.direction, Direction::Dl);
    proc.step(event, HarqEvent::FeedbackDelivered)
}

pub fn harq_ul_step(proc: &mut HarqProcess, event: HarqEvent) -> Result<HarqAction, HarqError> {
    debug_assert_eq!(proc.direction, Direction::Ul);
    proc.step(event, HarqEvent::GrantDelivered)
}

/// Steps a process in its own direction.
pub fn harq_step(proc: &mut HarqProcess, event: HarqEvent) -> Result<HarqAction, HarqError> {
    match proc.direction {
        Direction::Dl => harq_dl_step(proc, event),
        Direction::Ul => harq_ul_step(proc, event),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn proc(direction: Direction) -> HarqProcess {
        HarqProcess::new(1, direction, 0, 0, vec![], 0, 12, 3, 4)
    }

    #[test]
    fn dl_success_path() {
        let mut p = proc(Direction::Dl);
        assert_eq!(harq_dl_step(&mut p, HarqEvent::TxDone), Ok(HarqAction::None));
        assert_eq!(harq_dl_step(&mut p, HarqEvent::DecodeOk), Ok(HarqAction::Deliver));
        assert_eq!(p.state, HarqState::Delivered);
    }

    #[test]
    fn ul_failure_chain() {
        let mut p = proc(Direction::Ul);
        harq_ul_step(&mut p, HarqEvent::TxDone).unwrap();
        assert_eq!(harq_ul_step(&mut p, HarqEvent::DecodeFail), Ok(HarqAction::SendFeedback));
        // A DL-style NACK is not a legal UL event.
        assert!(harq_ul_step(&mut p.clone(), HarqEvent::FeedbackDelivered).is_err());
        assert_eq!(harq_ul_step(&mut p, HarqEvent::GrantDelivered), Ok(HarqAction::ScheduleRetx));
        harq_ul_step(&mut p, HarqEvent::TxDone).unwrap();
        assert_eq!(p.tx_count, 2);
    }

    #[test]
    fn drop_after_max_retx() {
        let mut p = proc(Direction::Dl);
        for attempt in 1..=5 {
            harq_dl_step(&mut p, HarqEvent::TxDone).unwrap();
            let a = harq_dl_step(&mut p, HarqEvent::DecodeFail).unwrap();
            if attempt == 5 {
                assert_eq!(a, HarqAction::Drop);
            } else {
                assert_eq!(a, HarqAction::SendFeedback);
                harq_dl_step(&mut p, HarqEvent::FeedbackDelivered).unwrap();
            }
        }
        assert_eq!(p.state, HarqState::Dropped);
        assert_eq!(p.tx_count, 5);
    }

    #[test]
    fn illegal_transitions() {
        let mut p = proc(Direction::Dl);
        assert!(harq_dl_step(&mut p, HarqEvent::DecodeOk).is_err());
        harq_dl_step(&mut p, HarqEvent::TxDone).unwrap();
        assert!(harq_dl_step(&mut p, HarqEvent::TxDone).is_err());
    }

    #[test]
    fn chase_combining_gain() {
        let mut p = proc(Direction::Ul);
        let s = 2.5;
        for _ in 0..3 {
            p.combine(s);
        }
        assert_abs_diff_eq!(p.combined_sinr_db() - lin_to_db(s), 10.0 * 3f64.log10(), epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn random_legal_runs_terminate(outcomes in proptest::collection::vec(any::<bool>(), 1..20), ul in any::<bool>(), max_retx in 0u32..6) {
            let dir = if ul { Direction::Ul } else { Direction::Dl };
            let feedback = if ul { HarqEvent::GrantDelivered } else { HarqEvent::FeedbackDelivered };
            let mut p = HarqProcess::new(9, dir, 0, 0, vec![], 0, 1, 0, max_retx);
            let mut steps = 0;
            let mut outcomes = outcomes.into_iter().cycle();
            while !p.state.is_terminal() {
                harq_step(&mut p, HarqEvent::TxDone).unwrap();
                let ok = outcomes.next().unwrap();
                let a = harq_step(&mut p, if ok { HarqEvent::DecodeOk } else { HarqEvent::DecodeFail }).unwrap();
                if a == HarqAction::SendFeedback {
                    prop_assert_eq!(harq_step(&mut p, feedback).unwrap(), HarqAction::ScheduleRetx);
                }
                steps += 1;
                prop_assert!(p.tx_count <= max_retx + 1);
                prop_assert!(steps <= max_retx + 1);
            }
        }
    }
}
