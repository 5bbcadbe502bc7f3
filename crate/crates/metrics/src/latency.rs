//! Per-batch delivery latency from broadcast/delivery markers.

use std::collections::{BTreeMap, BTreeSet};

use tobsim_engine::{EventKind, MsgId, NodeId, Trace};

/// One batch that completed: every honest node delivered it.
#[derive(Debug, Clone, Copy)]
pub struct BatchLatency {
    pub batch: MsgId,
    pub broadcast_time: u64,
    /// Delivery instant at the last honest node.
    pub last_delivery: u64,
    /// Payload bits carried by the batch (from its broadcast marker).
    pub payload_bits: u64,
}

impl BatchLatency {
    pub fn latency(&self) -> u64 {
        self.last_delivery - self.broadcast_time
    }
}

#[derive(Debug, Clone, Default)]
pub struct LatencySummary {
    /// Batches delivered by every honest node, in broadcast order.
    pub complete: Vec<BatchLatency>,
    /// Honest-attributed broadcasts observed at all.
    pub tracked: u64,
    /// Incomplete batches excused because the run ended within `horizon`
    /// of their broadcast.
    pub tail_exempt: u64,
    /// Incomplete batches with no excuse.
    pub liveness_failures: u64,
}

impl LatencySummary {
    pub fn mean(&self) -> Option<f64> {
        if self.complete.is_empty() {
            return None;
        }
        let sum: u64 = self.complete.iter().map(|b| b.latency()).sum();
        Some(sum as f64 / self.complete.len() as f64)
    }

    pub fn max(&self) -> Option<u64> {
        self.complete.iter().map(|b| b.latency()).max()
    }

    /// Total payload bits across complete batches — the denominator for
    /// amortized communication.
    pub fn delivered_payload_bits(&self) -> u64 {
        self.complete.iter().map(|b| b.payload_bits).sum()
    }
}

struct Pending {
    broadcast_time: u64,
    payload_bits: u64,
    deliverers: BTreeSet<NodeId>,
    last_delivery: u64,
}

/// Measure batch latency over a trace.
///
/// Only broadcasts attributed to honest nodes are tracked: an adversary is
/// free to announce batches and then withhold them, and that must show up
/// as adversary behavior, not as a liveness failure of the protocol. A
/// tracked batch is complete when all `n - |byzantine|` honest nodes have
/// delivered it; an incomplete batch is excused when `broadcast + horizon`
/// exceeds `end_time` (the run ended before the protocol owed delivery).
pub fn measure_latency(trace: &Trace, horizon: u64, end_time: u64) -> LatencySummary {
    let honest_count = trace.n as usize - trace.byzantine.len();
    let mut pending: BTreeMap<MsgId, Pending> = BTreeMap::new();
    let mut order: Vec<MsgId> = Vec::new();
    for m in trace.markers() {
        match m.kind {
            EventKind::Broadcast => {
                if trace.is_honest(m.node) && !pending.contains_key(&m.msg_id) {
                    pending.insert(
                        m.msg_id,
                        Pending {
                            broadcast_time: m.time,
                            payload_bits: m.size_bits,
                            deliverers: BTreeSet::new(),
                            last_delivery: 0,
                        },
                    );
                    order.push(m.msg_id);
                }
            }
            EventKind::Delivery => {
                if !trace.is_honest(m.node) {
                    continue;
                }
                if let Some(p) = pending.get_mut(&m.msg_id) {
                    if p.deliverers.insert(m.node) {
                        p.last_delivery = p.last_delivery.max(m.time);
                    }
                }
            }
            _ => {}
        }
    }

    let mut out = LatencySummary {
        tracked: order.len() as u64,
        ..LatencySummary::default()
    };
    for batch in order {
        let p = &pending[&batch];
        if p.deliverers.len() == honest_count {
            out.complete.push(BatchLatency {
                batch,
                broadcast_time: p.broadcast_time,
                last_delivery: p.last_delivery,
                payload_bits: p.payload_bits,
            });
        } else if p.broadcast_time + horizon > end_time {
            out.tail_exempt += 1;
        } else {
            out.liveness_failures += 1;
        }
    }
    out
}
