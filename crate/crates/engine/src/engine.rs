use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use crate::{Event, EventHandle, EventKind, MsgId, NodeId, SimError, Trace, TraceMode, VirtualTime};

/// Default ceiling on processed events before a run is declared runaway.
pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

struct Queued<P> {
    time: VirtualTime,
    sched: u64,
    event: Event<P>,
}

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.sched == other.sched
    }
}
impl<P> Eq for Queued<P> {}
impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.sched).cmp(&(other.time, other.sched))
    }
}

/// When `run` should return control.
pub enum Stop<'a> {
    /// Process everything scheduled up to and including this instant, then
    /// leave the clock there.
    At(VirtualTime),
    /// Run until the queue drains.
    Quiescent,
    /// Run until the predicate over the trace-so-far holds (checked after
    /// each processed event), or the queue drains, whichever comes first.
    When(Box<dyn FnMut(&Trace) -> bool + 'a>),
}

impl<'a> Stop<'a> {
    pub fn when(f: impl FnMut(&Trace) -> bool + 'a) -> Stop<'a> {
        Stop::When(Box::new(f))
    }
}

/// The discrete-event loop: a clock, a queue and the trace of what ran.
///
/// Events with equal firing times pop in scheduling order, which makes the
/// whole run a deterministic function of (config, seed). Handlers receive
/// `&mut Engine` back, so they schedule follow-ups and record markers from
/// inside the loop.
pub struct Engine<P> {
    now: VirtualTime,
    queue: BinaryHeap<Reverse<Queued<P>>>,
    next_sched: u64,
    cancelled: HashSet<u64>,
    trace: Trace,
    processed: u64,
    event_cap: u64,
}

impl<P> Engine<P> {
    pub fn new(config_digest: String, n: u32, byzantine: BTreeSet<NodeId>, mode: TraceMode) -> Engine<P> {
        Engine {
            now: VirtualTime::ZERO,
            queue: BinaryHeap::new(),
            next_sched: 0,
            cancelled: HashSet::new(),
            trace: Trace::new(config_digest, n, byzantine, mode),
            processed: 0,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }

    /// Replace the runaway cap (events processed in one run).
    pub fn set_event_cap(&mut self, cap: u64) {
        self.event_cap = cap;
    }

    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Number of events still queued (cancelled ones included until popped).
    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Schedule an event at an absolute instant; `at >= now` or error.
    pub fn schedule(
        &mut self,
        at: VirtualTime,
        kind: EventKind,
        node: NodeId,
        size_bits: u64,
        msg_id: MsgId,
        payload: P,
    ) -> Result<EventHandle, SimError> {
        if at < self.now {
            return Err(SimError::SchedulePast {
                at: at.steps(),
                now: self.now.steps(),
            });
        }
        let sched = self.next_sched;
        self.next_sched += 1;
        self.queue.push(Reverse(Queued {
            time: at,
            sched,
            event: Event {
                time: at,
                kind,
                node,
                size_bits,
                msg_id,
                payload,
            },
        }));
        Ok(EventHandle(sched))
    }

    /// Schedule relative to the current clock.
    pub fn schedule_in(
        &mut self,
        delay: u64,
        kind: EventKind,
        node: NodeId,
        size_bits: u64,
        msg_id: MsgId,
        payload: P,
    ) -> Result<EventHandle, SimError> {
        self.schedule(self.now + delay, kind, node, size_bits, msg_id, payload)
    }

    /// Cancel a scheduled event. Lazy: the queue entry stays until popped,
    /// then is skipped without being traced or handled.
    pub fn cancel(&mut self, handle: EventHandle) {
        self.cancelled.insert(handle.0);
    }

    /// Append a broadcast/delivery marker at the current instant. Markers
    /// are measurement anchors, not schedulable work.
    pub fn mark(&mut self, kind: EventKind, node: NodeId, size_bits: u64, msg_id: MsgId) {
        debug_assert!(
            matches!(kind, EventKind::Broadcast | EventKind::Delivery),
            "only broadcast/delivery lines are markers"
        );
        self.trace.append(self.now, kind, node, size_bits, msg_id);
    }

    fn pop_live(&mut self, limit: Option<VirtualTime>) -> Option<Event<P>> {
        loop {
            if let Some(limit) = limit {
                if self.queue.peek().is_none_or(|q| q.0.time > limit) {
                    return None;
                }
            }
            let Reverse(q) = self.queue.pop()?;
            if self.cancelled.remove(&q.sched) {
                continue;
            }
            return Some(q.event);
        }
    }

    /// Drive the loop until `stop` says done, handing each fired event to
    /// `handler` together with the engine (to schedule follow-ups).
    ///
    /// On a runaway cap hit the error is returned and the partial trace
    /// stays on the engine for inspection.
    pub fn run<F>(&mut self, stop: Stop, mut handler: F) -> Result<(), SimError>
    where
        F: FnMut(&mut Engine<P>, Event<P>) -> Result<(), SimError>,
    {
        let mut stop = stop;
        loop {
            if let Stop::When(pred) = &mut stop {
                if pred(&self.trace) {
                    return Ok(());
                }
            }
            let limit = match &stop {
                Stop::At(t) => Some(*t),
                _ => None,
            };
            let Some(event) = self.pop_live(limit) else {
                if let Stop::At(t) = stop {
                    if self.now < t {
                        self.now = t;
                    }
                }
                return Ok(());
            };
            debug_assert!(event.time >= self.now, "queue produced a past event");
            self.now = event.time;
            self.processed += 1;
            if self.processed > self.event_cap {
                return Err(SimError::Runaway {
                    processed: self.processed,
                    cap: self.event_cap,
                });
            }
            self.trace
                .append(event.time, event.kind, event.node, event.size_bits, event.msg_id);
            handler(self, event)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(n: u32) -> Engine<u32> {
        Engine::new("test".into(), n, BTreeSet::new(), TraceMode::Full)
    }

    #[test]
    fn events_fire_in_time_then_schedule_order() {
        let mut eng = bare(3);
        // Same instant, scheduled in order 10, 20, 30; different instant last.
        eng.schedule(VirtualTime(5), EventKind::TimerFire, 0, 0, 0, 10).unwrap();
        eng.schedule(VirtualTime(5), EventKind::TimerFire, 1, 0, 0, 20).unwrap();
        eng.schedule(VirtualTime(2), EventKind::TimerFire, 2, 0, 0, 5).unwrap();
        eng.schedule(VirtualTime(5), EventKind::TimerFire, 2, 0, 0, 30).unwrap();
        let mut seen = Vec::new();
        eng.run(Stop::Quiescent, |_, ev| {
            seen.push(ev.payload);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![5, 10, 20, 30]);
    }

    #[test]
    fn scheduling_in_the_past_is_an_error() {
        let mut eng = bare(1);
        eng.schedule(VirtualTime(10), EventKind::TimerFire, 0, 0, 0, 0).unwrap();
        eng.run(Stop::Quiescent, |_, _| Ok(())).unwrap();
        assert_eq!(eng.now(), VirtualTime(10));
        let err = eng
            .schedule(VirtualTime(3), EventKind::TimerFire, 0, 0, 0, 0)
            .unwrap_err();
        assert!(matches!(err, SimError::SchedulePast { at: 3, now: 10 }));
    }

    #[test]
    fn handlers_chain_events_and_trace_is_ordered() {
        let mut eng = bare(2);
        eng.schedule(VirtualTime(0), EventKind::ProtocolTick, 0, 0, 0, 3).unwrap();
        // Each tick schedules the next until the countdown payload hits zero.
        eng.run(Stop::Quiescent, |eng, ev| {
            if ev.payload > 0 {
                eng.schedule_in(4, EventKind::ProtocolTick, ev.node, 0, 0, ev.payload - 1)?;
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(eng.now(), VirtualTime(12));
        let times: Vec<u64> = eng.trace().records().iter().map(|r| r.time).collect();
        assert_eq!(times, vec![0, 4, 8, 12]);
        let seqs: Vec<u64> = eng.trace().records().iter().map(|r| r.seq).collect();
        assert_eq!(seqs, vec![0, 1, 2, 3]);
    }

    #[test]
    fn stop_at_leaves_clock_at_bound_and_rest_queued() {
        let mut eng = bare(1);
        for t in [1u64, 5, 9] {
            eng.schedule(VirtualTime(t), EventKind::TimerFire, 0, 0, 0, 0).unwrap();
        }
        let mut fired = 0;
        eng.run(Stop::At(VirtualTime(6)), |_, _| {
            fired += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(fired, 2);
        assert_eq!(eng.now(), VirtualTime(6));
        assert_eq!(eng.pending(), 1);
    }

    #[test]
    fn stop_predicate_halts_mid_run() {
        let mut eng = bare(1);
        for t in 0..100u64 {
            eng.schedule(VirtualTime(t), EventKind::TimerFire, 0, 0, 0, 0).unwrap();
        }
        eng.run(
            Stop::when(|tr: &Trace| tr.count(EventKind::TimerFire) >= 10),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(eng.trace().count(EventKind::TimerFire), 10);
        assert_eq!(eng.now(), VirtualTime(9));
    }

    #[test]
    fn empty_queue_quiesces_immediately() {
        let mut eng = bare(1);
        eng.run(Stop::Quiescent, |_, _| Ok(())).unwrap();
        assert!(eng.trace().is_empty());
        assert_eq!(eng.now(), VirtualTime::ZERO);
    }

    #[test]
    fn cancelled_events_never_fire_or_trace() {
        let mut eng = bare(1);
        let keep = eng.schedule(VirtualTime(1), EventKind::TimerFire, 0, 0, 7, 0).unwrap();
        let drop1 = eng.schedule(VirtualTime(2), EventKind::TimerFire, 0, 0, 8, 0).unwrap();
        let drop2 = eng.schedule(VirtualTime(3), EventKind::TimerFire, 0, 0, 9, 0).unwrap();
        let _ = keep;
        eng.cancel(drop1);
        eng.cancel(drop2);
        let mut fired = Vec::new();
        eng.run(Stop::Quiescent, |_, ev| {
            fired.push(ev.msg_id);
            Ok(())
        })
        .unwrap();
        assert_eq!(fired, vec![7]);
        assert_eq!(eng.trace().records().len(), 1);
    }

    #[test]
    fn runaway_cap_aborts_with_partial_trace() {
        let mut eng = bare(1);
        eng.set_event_cap(50);
        eng.schedule(VirtualTime(0), EventKind::ProtocolTick, 0, 0, 0, 0).unwrap();
        // Self-perpetuating tick: never quiesces on its own.
        let err = eng
            .run(Stop::Quiescent, |eng, ev| {
                eng.schedule_in(1, EventKind::ProtocolTick, ev.node, 0, 0, 0)?;
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, SimError::Runaway { processed: 51, cap: 50 }));
        assert_eq!(eng.trace().records().len(), 50);
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let run = || {
            let mut eng = bare(2);
            eng.schedule(VirtualTime(0), EventKind::ProtocolTick, 0, 0, 0, 5).unwrap();
            eng.run(Stop::Quiescent, |eng, ev| {
                if ev.payload > 0 {
                    eng.mark(EventKind::Broadcast, ev.node, 100, ev.payload as u64);
                    eng.schedule_in(3, EventKind::MessageDelivery, 1 - ev.node, 64, 1, ev.payload - 1)?;
                }
                Ok(())
            })
            .unwrap();
            eng.into_trace().serialize()
        };
        assert_eq!(run(), run());
    }
}
