use crate::VirtualTime;

/// Index of a node in a run; nodes are `0..n`.
pub type NodeId = u32;

/// Identifier shared by every trace line belonging to one logical message
/// (a broadcast's fan-out pieces reuse the id of the broadcast).
pub type MsgId = u64;

/// What kind of occurrence a scheduled event or trace line stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A point-to-point message arrives at `node`.
    MessageDelivery,
    /// A timer set by `node` fires.
    TimerFire,
    /// A protocol-defined tick (round boundary, epoch start) at `node`.
    ProtocolTick,
    /// Marker: `node` handed a payload to the broadcast layer (measurement
    /// start for latency). Not delivered to handlers; trace-only.
    Broadcast,
    /// Marker: the totally-ordered log at `node` delivered a payload
    /// (measurement end for latency). Not delivered to handlers; trace-only.
    Delivery,
}

impl EventKind {
    /// Token used in serialized trace lines.
    pub fn token(self) -> &'static str {
        match self {
            EventKind::MessageDelivery => "msg",
            EventKind::TimerFire => "timer",
            EventKind::ProtocolTick => "tick",
            EventKind::Broadcast => "bcast",
            EventKind::Delivery => "deliver",
        }
    }

    pub fn from_token(tok: &str) -> Option<EventKind> {
        Some(match tok {
            "msg" => EventKind::MessageDelivery,
            "timer" => EventKind::TimerFire,
            "tick" => EventKind::ProtocolTick,
            "bcast" => EventKind::Broadcast,
            "deliver" => EventKind::Delivery,
            _ => return None,
        })
    }
}

/// A scheduled occurrence, handed to the run's handler when it fires.
///
/// `size_bits` is the bit size accounted for message deliveries (0 for
/// timers and ticks); `payload` is whatever the protocol needs to resume.
#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: VirtualTime,
    pub kind: EventKind,
    pub node: NodeId,
    pub size_bits: u64,
    pub msg_id: MsgId,
    pub payload: P,
}

/// Handle returned by `Engine::schedule`, usable to cancel the event before
/// it fires (timers that are superseded, typically).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(pub(crate) u64);
