use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::{EventKind, MsgId, NodeId, SimError, VirtualTime};

/// One line of a run trace.
///
/// Lines are totally ordered by `(time, seq)`: `seq` is assigned in
/// processing order, so the trace is already sorted as appended and equal
/// runs serialize to byte-identical files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: u64,
    pub seq: u64,
    pub kind: EventKind,
    pub node: NodeId,
    pub size_bits: u64,
    pub msg_id: MsgId,
}

/// How much of a run the trace retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Every processed event is kept; the trace serializes and replays.
    Full,
    /// Only broadcast/delivery markers and aggregate counters are kept.
    /// Large sweeps use this: a single big run can process millions of
    /// message deliveries that metrics never need individually.
    Markers,
}

/// Append-only record of a run.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Hex digest of the resolved configuration that produced the run.
    pub config_digest: String,
    /// Number of nodes in the run.
    pub n: u32,
    /// Nodes controlled by the adversary.
    pub byzantine: BTreeSet<NodeId>,
    mode: TraceMode,
    records: Vec<TraceRecord>,
    markers: Vec<TraceRecord>,
    next_seq: u64,
    counts: [u64; 5],
    message_bits: u64,
}

impl Trace {
    pub fn new(config_digest: String, n: u32, byzantine: BTreeSet<NodeId>, mode: TraceMode) -> Trace {
        Trace {
            config_digest,
            n,
            byzantine,
            mode,
            records: Vec::new(),
            markers: Vec::new(),
            next_seq: 0,
            counts: [0; 5],
            message_bits: 0,
        }
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    pub fn is_honest(&self, node: NodeId) -> bool {
        !self.byzantine.contains(&node)
    }

    /// Append one line at `time`. Called by the engine in processing order.
    pub(crate) fn append(
        &mut self,
        time: VirtualTime,
        kind: EventKind,
        node: NodeId,
        size_bits: u64,
        msg_id: MsgId,
    ) {
        if let Some(last) = self.last_time() {
            debug_assert!(time.steps() >= last, "trace time went backwards");
        }
        let rec = TraceRecord {
            time: time.steps(),
            seq: self.next_seq,
            kind,
            node,
            size_bits,
            msg_id,
        };
        self.next_seq += 1;
        self.counts[Self::slot(kind)] += 1;
        if kind == EventKind::MessageDelivery {
            self.message_bits += size_bits;
        }
        match kind {
            EventKind::Broadcast | EventKind::Delivery => self.markers.push(rec),
            _ => {}
        }
        if self.mode == TraceMode::Full {
            self.records.push(rec);
        }
    }

    fn slot(kind: EventKind) -> usize {
        match kind {
            EventKind::MessageDelivery => 0,
            EventKind::TimerFire => 1,
            EventKind::ProtocolTick => 2,
            EventKind::Broadcast => 3,
            EventKind::Delivery => 4,
        }
    }

    fn last_time(&self) -> Option<u64> {
        match self.mode {
            TraceMode::Full => self.records.last().map(|r| r.time),
            TraceMode::Markers => None,
        }
    }

    /// All retained lines (full mode only; empty under `Markers`).
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Broadcast/delivery marker lines, retained in every mode.
    pub fn markers(&self) -> &[TraceRecord] {
        &self.markers
    }

    /// Number of lines of `kind` appended (counted in every mode).
    pub fn count(&self, kind: EventKind) -> u64 {
        self.counts[Self::slot(kind)]
    }

    /// Total `size_bits` over all message deliveries, honest or not.
    pub fn message_bits(&self) -> u64 {
        self.message_bits
    }

    pub fn len(&self) -> u64 {
        self.next_seq
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    /// Serialize to the line-oriented text format. Only meaningful in full
    /// mode (markers mode would silently drop lines, so it is refused).
    pub fn serialize(&self) -> String {
        assert!(
            self.mode == TraceMode::Full,
            "only full traces serialize completely"
        );
        let mut out = String::new();
        out.push_str("# trace v1\n");
        let _ = writeln!(out, "# config {}", self.config_digest);
        let _ = writeln!(out, "# n {}", self.n);
        if self.byzantine.is_empty() {
            out.push_str("# byzantine -\n");
        } else {
            let ids: Vec<String> = self.byzantine.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(out, "# byzantine {}", ids.join(","));
        }
        for r in &self.records {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                r.time,
                r.seq,
                r.kind.token(),
                r.node,
                r.size_bits,
                r.msg_id
            );
        }
        out
    }

    /// Parse a serialized trace back.
    pub fn parse(text: &str) -> Result<Trace, SimError> {
        let mut trace = Trace::new(String::new(), 0, BTreeSet::new(), TraceMode::Full);
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let bad = |reason: &str| SimError::TraceParse {
                line: lineno,
                reason: reason.to_string(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                let mut it = rest.splitn(2, ' ');
                match (it.next(), it.next()) {
                    (Some("trace"), _) => {}
                    (Some("config"), Some(d)) => trace.config_digest = d.to_string(),
                    (Some("n"), Some(v)) => {
                        trace.n = v.parse().map_err(|_| bad("bad node count"))?
                    }
                    (Some("byzantine"), Some("-")) => {}
                    (Some("byzantine"), Some(ids)) => {
                        for id in ids.split(',') {
                            trace
                                .byzantine
                                .insert(id.parse().map_err(|_| bad("bad byzantine id"))?);
                        }
                    }
                    _ => return Err(bad("unknown header")),
                }
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let time: u64 = fields[0].parse().map_err(|_| bad("bad time"))?;
            let seq: u64 = fields[1].parse().map_err(|_| bad("bad seq"))?;
            let kind = EventKind::from_token(fields[2]).ok_or_else(|| bad("bad kind"))?;
            let node: NodeId = fields[3].parse().map_err(|_| bad("bad node"))?;
            let size_bits: u64 = fields[4].parse().map_err(|_| bad("bad size"))?;
            let msg_id: MsgId = fields[5].parse().map_err(|_| bad("bad msg id"))?;
            if seq != trace.next_seq {
                return Err(bad("seq out of order"));
            }
            trace.append(VirtualTime(time), kind, node, size_bits, msg_id);
        }
        Ok(trace)
    }
}
