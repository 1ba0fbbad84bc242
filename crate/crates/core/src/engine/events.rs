//! Time-ordered event queue.
//!
//! Events at the same symbol run in a fixed order, lowest rank first:
//! decode completions, feedback deliveries, slot buffer samples, frame
//! boundaries, TTI starts, packet arrivals. Within one rank events run in
//! insertion order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// A transport block finished decoding; `ok` is the drawn outcome.
    DecodeDone { harq: u64, ok: bool },
    /// A DL NACK reached the BS, or an UL retransmission grant reached the UE.
    FeedbackDue { harq: u64 },
    /// End of a slot: buffers are sampled for frame selection.
    SlotSample,
    FrameBoundary,
    TxStart,
    /// A packet of `bits` enters the buffer of `ue`. Injected packets do not
    /// pull the next arrival from the UE's traffic source.
    Arrival { ue: usize, bits: u32, injected: bool },
}

impl Event {
    pub fn rank(&self) -> u8 {
        match self {
            Event::DecodeDone { .. } => 0,
            Event::FeedbackDue { .. } => 1,
            Event::SlotSample => 2,
            Event::FrameBoundary => 3,
            Event::TxStart => 4,
            Event::Arrival { .. } => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    time: u64,
    rank: u8,
    seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<(Key, EventSlot)>>,
    seq: u64,
}

/// Wrapper giving events a total order that never decides anything (the key
/// is unique), so the heap can hold them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EventSlot(Event);

impl PartialOrd for EventSlot {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventSlot {
    fn cmp(&self, _other: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: u64, event: Event) {
        let key = Key {
            time,
            rank: event.rank(),
            seq: self.seq,
        };
        self.seq += 1;
        self.heap.push(Reverse((key, EventSlot(event))));
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse((k, _))| k.time)
    }

    /// Pops the next event if it is due at or before `time`.
    pub fn pop_due(&mut self, time: u64) -> Option<(u64, Event)> {
        if self.peek_time()? > time {
            return None;
        }
        self.heap.pop().map(|Reverse((k, e))| (k.time, e.0))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_then_rank_then_insertion() {
        let mut q = EventQueue::new();
        q.push(5, Event::Arrival { ue: 1, bits: 8, injected: false });
        q.push(5, Event::TxStart);
        q.push(3, Event::Arrival { ue: 2, bits: 8, injected: false });
        q.push(5, Event::DecodeDone { harq: 1, ok: true });
        q.push(5, Event::Arrival { ue: 0, bits: 8, injected: false });
        q.push(5, Event::FrameBoundary);
        let mut out = Vec::new();
        while let Some((t, e)) = q.pop_due(u64::MAX) {
            out.push((t, e));
        }
        assert_eq!(
            out,
            vec![
                (3, Event::Arrival { ue: 2, bits: 8, injected: false }),
                (5, Event::DecodeDone { harq: 1, ok: true }),
                (5, Event::FrameBoundary),
                (5, Event::TxStart),
                (5, Event::Arrival { ue: 1, bits: 8, injected: false }),
                (5, Event::Arrival { ue: 0, bits: 8, injected: false }),
            ]
        );
    }

    #[test]
    fn pop_due_respects_time() {
        let mut q = EventQueue::new();
        q.push(10, Event::TxStart);
        assert!(q.pop_due(9).is_none());
        assert_eq!(q.pop_due(10), Some((10, Event::TxStart)));
        assert!(q.is_empty());
    }
}
