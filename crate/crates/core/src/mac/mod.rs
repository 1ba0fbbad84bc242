//! Per-TTI MAC decisions.
//!
//! Everything here is a pure function of the state the engine hands in:
//! UL power control, configured-grant (CG) UL transmission, the two DL
//! schedulers, link adaptation and the HARQ state machines.

pub mod cg;
pub mod harq;
pub mod link_adaptation;
pub mod power;
pub mod scheduler;

pub use cg::{cg_transmit, CgConfig, CgTransmission};
pub use harq::{harq_dl_step, harq_ul_step, HarqAction, HarqError, HarqEvent, HarqProcess, HarqState};
pub use link_adaptation::{select_mcs, CqiTracker};
pub use power::{retx_power, ul_tx_power, PowerControlConfig};
pub use scheduler::{schedule, schedule_min_hold, schedule_pf, Allocation, SchedCandidate, SchedDecision, SchedParams, SchedulerKind};
