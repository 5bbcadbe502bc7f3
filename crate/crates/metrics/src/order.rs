//! Ordered-broadcast contract checking over delivery markers.
//!
//! Four properties, each judged separately so a report can say *which*
//! guarantee broke: validity (an honest client's batch reaches everyone),
//! agreement (delivered anywhere means delivered everywhere), integrity
//! (each batch at most once, and only ever a batch that was announced),
//! and total order (no two honest nodes disagree on relative order). A
//! declared conflicting pair — an adversary announcing two batches it
//! never lets resolve — weakens the order verdict to partial rather than
//! failing it, provided neither side of the pair was ever delivered.

use std::collections::{BTreeMap, BTreeSet};

use tobsim_engine::{EventKind, MsgId, NodeId, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    /// Holds in a weakened (partial-order) form.
    Weakened(String),
    Violated(String),
}

impl Verdict {
    pub fn ok(&self) -> bool {
        !matches!(self, Verdict::Violated(_))
    }
}

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub validity: Verdict,
    pub agreement: Verdict,
    pub integrity: Verdict,
    pub total_order: Verdict,
}

impl OrderReport {
    pub fn all_ok(&self) -> bool {
        self.validity.ok() && self.agreement.ok() && self.integrity.ok() && self.total_order.ok()
    }
}

/// Check the contract over a trace. `horizon` excuses batches the run
/// ended too early to owe: a broadcast (for validity) or a first delivery
/// (for agreement) within `horizon` of `end_time` is not charged.
pub fn check_order(trace: &Trace, horizon: u64, end_time: u64, conflicted: &[MsgId]) -> OrderReport {
    let honest: Vec<NodeId> = (0..trace.n).filter(|&i| trace.is_honest(i)).collect();
    let mut broadcasts: BTreeMap<MsgId, (bool, u64)> = BTreeMap::new();
    let mut seq: BTreeMap<NodeId, Vec<MsgId>> = honest.iter().map(|&i| (i, Vec::new())).collect();
    let mut first_delivery: BTreeMap<MsgId, u64> = BTreeMap::new();
    for m in trace.markers() {
        match m.kind {
            EventKind::Broadcast => {
                broadcasts
                    .entry(m.msg_id)
                    .or_insert((trace.is_honest(m.node), m.time));
            }
            EventKind::Delivery => {
                if let Some(s) = seq.get_mut(&m.node) {
                    s.push(m.msg_id);
                    first_delivery.entry(m.msg_id).or_insert(m.time);
                }
            }
            _ => {}
        }
    }

    let mut integrity = Verdict::Satisfied;
    'integ: for (&node, s) in &seq {
        let mut seen = BTreeSet::new();
        for &batch in s {
            if !seen.insert(batch) {
                integrity = Verdict::Violated(format!("node {node} delivered batch {batch} twice"));
                break 'integ;
            }
            if !broadcasts.contains_key(&batch) {
                integrity =
                    Verdict::Violated(format!("node {node} delivered unannounced batch {batch}"));
                break 'integ;
            }
        }
    }

    let delivered_by: BTreeMap<NodeId, BTreeSet<MsgId>> = seq
        .iter()
        .map(|(&n, s)| (n, s.iter().copied().collect()))
        .collect();

    let mut validity = Verdict::Satisfied;
    'val: for (&batch, &(by_honest, at)) in &broadcasts {
        if !by_honest || at + horizon > end_time {
            continue;
        }
        for &node in &honest {
            if !delivered_by[&node].contains(&batch) {
                validity = Verdict::Violated(format!(
                    "batch {batch} (broadcast at {at}) never delivered by node {node}"
                ));
                break 'val;
            }
        }
    }

    let mut agreement = Verdict::Satisfied;
    'agr: for (&batch, &at) in &first_delivery {
        if at + horizon > end_time {
            continue;
        }
        for &node in &honest {
            if !delivered_by[&node].contains(&batch) {
                agreement = Verdict::Violated(format!(
                    "batch {batch} delivered (first at {at}) but missing at node {node}"
                ));
                break 'agr;
            }
        }
    }

    let mut total_order = order_consistency(&honest, &seq);
    if total_order == Verdict::Satisfied && !conflicted.is_empty() {
        match conflicted.iter().find(|c| first_delivery.contains_key(c)) {
            Some(c) => {
                total_order =
                    Verdict::Violated(format!("conflicting batch {c} was delivered"));
            }
            None => {
                total_order = Verdict::Weakened(
                    "partial order: a conflicting pair stayed undecided".into(),
                );
            }
        }
    }

    OrderReport {
        validity,
        agreement,
        integrity,
        total_order,
    }
}

/// Pairwise order agreement: restricted to batches both nodes delivered,
/// their sequences must induce the same order. Walking one node's sequence
/// filtered to the common set and requiring the other node's positions to
/// be strictly increasing is exactly that check.
fn order_consistency(honest: &[NodeId], seq: &BTreeMap<NodeId, Vec<MsgId>>) -> Verdict {
    for (ai, &a) in honest.iter().enumerate() {
        for &b in &honest[ai + 1..] {
            let pos_b: BTreeMap<MsgId, usize> =
                seq[&b].iter().enumerate().map(|(i, &m)| (m, i)).collect();
            let mut last: Option<(MsgId, usize)> = None;
            for &m in seq[&a].iter().filter(|m| pos_b.contains_key(m)) {
                let at_b = pos_b[&m];
                if let Some((prev, prev_b)) = last {
                    if at_b < prev_b {
                        return Verdict::Violated(format!(
                            "nodes {a} and {b} disagree on the order of batches {prev} and {m}"
                        ));
                    }
                }
                last = Some((m, at_b));
            }
        }
    }
    Verdict::Satisfied
}
