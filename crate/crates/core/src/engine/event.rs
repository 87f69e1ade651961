use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// The client hands request `req` to its edge router.
    ClientEmit {
        req: usize,
    },
    NodeArrival {
        req: usize,
        node: usize,
    },
    /// The request at the head of `node`'s queue finishes.
    ServiceComplete {
        node: usize,
    },
    ResultDelivered {
        req: usize,
    },
    /// Every proactive router publishes its load to its neighbors; `n`
    /// counts ticks from zero.
    ExchangeTick {
        n: u64,
    },
    /// A published load lands at `to`.
    LoadStateExchange {
        from: usize,
        to: usize,
        load: f64,
        sent_at: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed so the max-heap pops the earliest (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by time, then insertion sequence.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past: {time} < {}", self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        let ev = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
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
    fn pops_in_time_then_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(2.0, EventKind::ResultDelivered { req: 0 });
        q.schedule(1.0, EventKind::ResultDelivered { req: 1 });
        q.schedule(1.0, EventKind::ResultDelivered { req: 2 });
        q.schedule(0.5, EventKind::ExchangeTick { n: 0 });
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.time, e.seq)).collect();
        assert_eq!(order, vec![(0.5, 3), (1.0, 1), (1.0, 2), (2.0, 0)]);
        assert_eq!(q.now(), 2.0);
    }
}
