use std::collections::{BTreeMap, BTreeSet, HashMap};

use tobsim_engine::{Engine, Event, EventKind, MsgId, NodeId, RngStream, SimError, VirtualTime};

use crate::{BitLedger, CorruptionMap};

/// How a delay inside the allowed window is picked for each message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPolicy {
    /// Always the bound `delta` — worst-case latency measurements.
    Max,
    /// Always one step — best-case/fault-free floors.
    Min,
    /// Uniform in `[1, delta]` from the network's own stream.
    Random,
}

/// The synchrony assumption a run executes under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynchronyMode {
    /// Every message arrives within `delta` steps of being sent.
    Synchronous,
    /// Before `gst` delays are finite but unbounded (modeled as delivery at
    /// `gst` plus a policy delay); from `gst` on, within `delta`.
    PartiallySynchronous { gst: u64 },
    /// No bound at all, but reordering is limited: a message tagged with
    /// protocol round `r` may not still be undelivered once round `r + 2`
    /// traffic starts arriving — the adversary can stall, not leapfrog.
    AsynchronousRounds,
}

struct MsgMeta {
    round: u32,
    outstanding: u32,
}

#[derive(Default)]
struct RoundInflight {
    outstanding: u64,
    /// Latest delivery instant currently scheduled for this round.
    latest: u64,
}

/// The message layer: applies the synchrony assumption and delay policy,
/// schedules deliveries on the engine, and keeps the received-bit ledger.
///
/// Payload type `P` is whatever the protocol wants back when a delivery
/// fires. The protocol's event loop must hand every `MessageDelivery` event
/// to [`Network::delivered`] so accounting and round bookkeeping stay true.
pub struct Network<P> {
    delta: u64,
    mode: SynchronyMode,
    policy: DelayPolicy,
    corruption: CorruptionMap,
    ledger: BitLedger,
    rng: RngStream,
    next_id: MsgId,
    /// Senders whose traffic always takes the full `delta`, regardless of
    /// policy — the delay-maximizing byzantine strategy.
    slow_senders: BTreeSet<NodeId>,
    /// Async-rounds state; unused in the other modes.
    msg_meta: HashMap<MsgId, MsgMeta>,
    rounds: BTreeMap<u32, RoundInflight>,
    _payload: std::marker::PhantomData<fn() -> P>,
}

impl<P> Network<P> {
    pub fn new(
        delta: u64,
        mode: SynchronyMode,
        policy: DelayPolicy,
        corruption: CorruptionMap,
        rng: RngStream,
        track_message_bits: bool,
    ) -> Network<P> {
        Network {
            delta,
            mode,
            policy,
            corruption,
            ledger: BitLedger::new(track_message_bits),
            rng,
            next_id: 1,
            slow_senders: BTreeSet::new(),
            msg_meta: HashMap::new(),
            rounds: BTreeMap::new(),
            _payload: std::marker::PhantomData,
        }
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn corruption(&self) -> &CorruptionMap {
        &self.corruption
    }

    pub fn ledger(&self) -> &BitLedger {
        &self.ledger
    }

    /// Tear down the network, keeping the accumulated ledger.
    pub fn into_ledger(self) -> BitLedger {
        self.ledger
    }

    /// Force all traffic from `node` to take the full `delta`.
    pub fn mark_slow_sender(&mut self, node: NodeId) {
        self.slow_senders.insert(node);
    }

    /// Allocate a fresh message id (also used for payload/batch identities
    /// so ids are unique across a whole run).
    pub fn fresh_id(&mut self) -> MsgId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn policy_delay(&mut self, sender: NodeId) -> u64 {
        if self.slow_senders.contains(&sender) {
            return self.delta;
        }
        match self.policy {
            DelayPolicy::Max => self.delta,
            DelayPolicy::Min => 1,
            DelayPolicy::Random => self.rng.between(1, self.delta),
        }
    }

    /// Delivery instant for a message sent `now`, honoring mode + policy.
    fn delivery_time(&mut self, now: VirtualTime, sender: NodeId, round: u32) -> VirtualTime {
        let d = self.policy_delay(sender);
        match self.mode {
            SynchronyMode::Synchronous => now + d,
            SynchronyMode::PartiallySynchronous { gst } => {
                if now.steps() < gst {
                    VirtualTime(gst) + d
                } else {
                    now + d
                }
            }
            SynchronyMode::AsynchronousRounds => {
                // The adversary may hold this message as long as it wants,
                // except that everything from two rounds back must land
                // first. Scheduling after the latest pending delivery of
                // rounds <= r-2 realizes exactly that constraint.
                let gate = round.checked_sub(2).map_or(0, |cutoff| {
                    self.rounds
                        .range(..=cutoff)
                        .filter(|(_, inflight)| inflight.outstanding > 0)
                        .map(|(_, inflight)| inflight.latest)
                        .max()
                        .unwrap_or(0)
                });
                let at = (now.steps() + d).max(gate + 1);
                VirtualTime(at)
            }
        }
    }

    /// Send one message; the delivery event fires at the receiver. A
    /// message to oneself is not network traffic and is rejected.
    #[allow(clippy::too_many_arguments)]
    pub fn send(
        &mut self,
        eng: &mut Engine<P>,
        sender: NodeId,
        receiver: NodeId,
        round: u32,
        size_bits: u64,
        msg_id: MsgId,
        payload: P,
    ) -> Result<(), SimError> {
        assert_ne!(sender, receiver, "self-sends are local, not network traffic");
        let at = self.delivery_time(eng.now(), sender, round);
        if self.mode == SynchronyMode::AsynchronousRounds {
            let meta = self.msg_meta.entry(msg_id).or_insert(MsgMeta {
                round,
                outstanding: 0,
            });
            meta.outstanding += 1;
            let inflight = self.rounds.entry(round).or_default();
            inflight.outstanding += 1;
            inflight.latest = inflight.latest.max(at.steps());
        }
        eng.schedule(at, EventKind::MessageDelivery, receiver, size_bits, msg_id, payload)?;
        Ok(())
    }

    /// Send the same logical message to every other node, one delivery per
    /// receiver, all sharing `msg_id`. Returns the number of receivers.
    pub fn broadcast(
        &mut self,
        eng: &mut Engine<P>,
        sender: NodeId,
        round: u32,
        size_bits: u64,
        msg_id: MsgId,
        mut payload_for: impl FnMut(NodeId) -> P,
    ) -> Result<u32, SimError> {
        let n = self.corruption.n();
        let mut receivers = 0;
        for node in 0..n {
            if node == sender {
                continue;
            }
            self.send(eng, sender, node, round, size_bits, msg_id, payload_for(node))?;
            receivers += 1;
        }
        Ok(receivers)
    }

    /// Account a fired delivery event. Must be called for every
    /// `MessageDelivery` the engine hands to the protocol loop.
    pub fn delivered(&mut self, ev: &Event<P>) {
        debug_assert_eq!(ev.kind, EventKind::MessageDelivery);
        if self.corruption.is_honest(ev.node) {
            self.ledger.credit(ev.node, ev.msg_id, ev.size_bits);
        }
        if self.mode == SynchronyMode::AsynchronousRounds {
            let round = {
                let meta = self
                    .msg_meta
                    .get_mut(&ev.msg_id)
                    .expect("delivery for unknown async message");
                meta.outstanding -= 1;
                let round = meta.round;
                if meta.outstanding == 0 {
                    self.msg_meta.remove(&ev.msg_id);
                }
                round
            };
            let inflight = self
                .rounds
                .get_mut(&round)
                .expect("delivery for unknown async round");
            inflight.outstanding -= 1;
            if inflight.outstanding == 0 {
                self.rounds.remove(&round);
            }
        }
    }
}
