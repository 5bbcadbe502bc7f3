use std::collections::BTreeMap;

use tobsim_engine::{MsgId, NodeId};

/// Running account of bits received by honest nodes.
///
/// Communication complexity is measured as bits *received by honest nodes*;
/// the network credits this ledger on every delivery to an honest receiver.
/// Per-message detail can be disabled for very large runs where millions of
/// distinct message ids would dominate memory.
#[derive(Debug, Clone)]
pub struct BitLedger {
    by_node: BTreeMap<NodeId, u64>,
    by_message: Option<BTreeMap<MsgId, u64>>,
    total: u64,
}

impl BitLedger {
    pub fn new(track_messages: bool) -> BitLedger {
        BitLedger {
            by_node: BTreeMap::new(),
            by_message: track_messages.then(BTreeMap::new),
            total: 0,
        }
    }

    /// Credit `bits` received by `node` as part of message `msg`.
    pub fn credit(&mut self, node: NodeId, msg: MsgId, bits: u64) {
        *self.by_node.entry(node).or_insert(0) += bits;
        if let Some(per_msg) = &mut self.by_message {
            *per_msg.entry(msg).or_insert(0) += bits;
        }
        self.total += bits;
    }

    /// All bits received by honest nodes so far.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bits received by one node.
    pub fn node_bits(&self, node: NodeId) -> u64 {
        self.by_node.get(&node).copied().unwrap_or(0)
    }

    /// Bits received (across all honest receivers) for one message id.
    /// `None` if per-message tracking is off.
    pub fn message_bits(&self, msg: MsgId) -> Option<u64> {
        self.by_message
            .as_ref()
            .map(|m| m.get(&msg).copied().unwrap_or(0))
    }

    pub fn per_node(&self) -> &BTreeMap<NodeId, u64> {
        &self.by_node
    }
}
