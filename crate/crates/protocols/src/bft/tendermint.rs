//! Rotating-leader three-phase BFT.
//!
//! Each height runs rounds of propose / prevote / precommit with leader
//! `(height - 1 + round) mod n`. A proposal that gathers a prevote quorum
//! (`floor(2n/3) + 1`) locks its voters; a precommit quorum commits it.
//! Locked nodes prevote only their lock and an honest leader re-proposes
//! its own lock, so any two quorums at one height intersect in an honest
//! locked node — that is the whole safety argument, and the run checks it
//! online by comparing every honest commit against a global registry.
//!
//! Timing under the worst-case delay policy: a fault-free round commits
//! exactly three message delays after the proposal; a failed round costs
//! the full `timeout_factor * delta`.

use std::collections::{BTreeMap, HashMap, HashSet};

use tobsim_engine::{
    Engine, Event, EventHandle, EventKind, MsgId, NodeId, RngStream, SimError, Stop,
};
use tobsim_net::{CorruptionMap, Network, SizeModel};

use crate::common::{
    BatchQueue, ByzStrategy, HeightCommit, ProtoStats, ProtocolKind, RunArtifacts, RunConfig,
    TendermintStats,
};
use crate::RunError;

/// A proposed value: identity plus the batch it carries (0 = junk).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TmBlock {
    id: u64,
    batch: MsgId,
}

#[derive(Debug, Clone, Copy)]
enum TmMsg {
    Proposal {
        h: u64,
        r: u32,
        sender: NodeId,
        block: TmBlock,
    },
    Prevote {
        h: u64,
        r: u32,
        sender: NodeId,
        v: Option<TmBlock>,
    },
    Precommit {
        h: u64,
        r: u32,
        sender: NodeId,
        v: Option<TmBlock>,
    },
    ProposeTimeout {
        h: u64,
        r: u32,
    },
    RoundTimeout {
        h: u64,
        r: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Propose,
    Prevote,
    Precommit,
}

/// Phase marker for vote tallies: false = prevote, true = precommit.
type Phase = bool;

struct TmNode {
    h: u64,
    r: u32,
    step: Step,
    locked: Option<TmBlock>,
    /// (h, r, phase) -> value -> count, deduplicated per sender below.
    votes: HashMap<(u64, u32, Phase), HashMap<Option<u64>, u32>>,
    voted: HashSet<(u64, u32, Phase, NodeId)>,
    /// Block id -> block, learned from proposals and votes.
    blocks: HashMap<u64, TmBlock>,
    proposals: HashMap<(u64, u32), TmBlock>,
    propose_timer: Option<EventHandle>,
    round_timer: Option<EventHandle>,
    /// Batches already committed locally (marker dedup).
    delivered: HashSet<MsgId>,
    done: bool,
}

impl TmNode {
    fn new() -> TmNode {
        TmNode {
            h: 1,
            r: 0,
            step: Step::Propose,
            locked: None,
            votes: HashMap::new(),
            voted: HashSet::new(),
            blocks: HashMap::new(),
            proposals: HashMap::new(),
            propose_timer: None,
            round_timer: None,
            delivered: HashSet::new(),
            done: false,
        }
    }

    fn record_vote(&mut self, sender: NodeId, h: u64, r: u32, phase: Phase, v: Option<TmBlock>) {
        if h < self.h || !self.voted.insert((h, r, phase, sender)) {
            return;
        }
        if let Some(block) = v {
            self.blocks.insert(block.id, block);
        }
        *self
            .votes
            .entry((h, r, phase))
            .or_default()
            .entry(v.map(|b| b.id))
            .or_insert(0) += 1;
    }

    /// A value with at least `quorum` votes at (h, r, phase), non-nil first.
    fn quorum_value(&self, h: u64, r: u32, phase: Phase, quorum: u32) -> Option<Option<u64>> {
        let tally = self.votes.get(&(h, r, phase))?;
        let mut nil_hit = false;
        for (value, count) in tally {
            if *count >= quorum {
                match value {
                    Some(_) => return Some(*value),
                    None => nil_hit = true,
                }
            }
        }
        if nil_hit {
            Some(None)
        } else {
            None
        }
    }

    /// Any round of height `h` whose precommit tally reached quorum on a
    /// real value.
    fn commit_candidate(&self, h: u64, quorum: u32) -> Option<(u32, TmBlock)> {
        let mut best: Option<(u32, TmBlock)> = None;
        for ((vh, vr, phase), tally) in &self.votes {
            if *vh != h || !phase {
                continue;
            }
            for (value, count) in tally {
                if *count >= quorum {
                    if let Some(id) = value {
                        let block = self.blocks[id];
                        if best.is_none_or(|(r, _)| *vr < r) {
                            best = Some((*vr, block));
                        }
                    }
                }
            }
        }
        best
    }

    fn prune_below(&mut self, h: u64) {
        self.votes.retain(|(vh, _, _), _| *vh >= h);
        self.voted.retain(|(vh, _, _, _)| *vh >= h);
        self.proposals.retain(|(vh, _), _| *vh >= h);
    }
}

struct TmRun {
    n: u32,
    quorum: u32,
    heights: u64,
    tf: u64,
    delta: u64,
    strategy: ByzStrategy,
    vote_bits: u64,
    proposal_bits: u64,
    payload_bits: u64,
    net: Network<TmMsg>,
    queue: BatchQueue,
    nodes: Vec<TmNode>,
    /// Client batch for each height, minted when the height first starts.
    height_batch: HashMap<u64, MsgId>,
    /// Global commit registry: height -> (block id, batch, first commit
    /// time, rounds used). Honest commits must all agree with it.
    committed: BTreeMap<u64, (u64, MsgId, u64, u32)>,
    safety_violation: bool,
}

impl TmRun {
    fn leader(&self, h: u64, r: u32) -> NodeId {
        // Heights are 1-based; the rotation starts over at node 0 so a
        // corrupt prefix of f nodes really does cost f failed rounds.
        ((h - 1 + r as u64) % self.n as u64) as NodeId
    }

    fn is_honest(&self, node: NodeId) -> bool {
        self.net.corruption().is_honest(node)
    }

    /// Whether this node runs the state machine at all.
    fn participates(&self, node: NodeId) -> bool {
        self.is_honest(node) || self.strategy != ByzStrategy::Silent
    }

    fn equivocates(&self, node: NodeId) -> bool {
        !self.is_honest(node) && self.strategy == ByzStrategy::Equivocate
    }

    fn height_batch(&mut self, eng: &mut Engine<TmMsg>, h: u64) -> MsgId {
        if let Some(&b) = self.height_batch.get(&h) {
            return b;
        }
        let id = self.net.fresh_id();
        self.queue.mint(eng, id, None);
        self.height_batch.insert(h, id);
        id
    }

    fn boot(&mut self, eng: &mut Engine<TmMsg>) -> Result<(), SimError> {
        for node in 0..self.n {
            if self.participates(node) {
                self.enter_round(eng, node, 0)?;
            }
        }
        Ok(())
    }

    fn enter_round(&mut self, eng: &mut Engine<TmMsg>, node: NodeId, r: u32) -> Result<(), SimError> {
        let h = self.nodes[node as usize].h;
        if self.is_honest(node) {
            // The client hands over the height's batch as soon as the height
            // opens, so failed leader rounds count against its latency.
            self.height_batch(eng, h);
        }
        {
            let st = &mut self.nodes[node as usize];
            st.r = r;
            st.step = Step::Propose;
        }
        let propose_at = eng.now() + (self.tf - 2) * self.delta;
        let round_at = eng.now() + self.tf * self.delta;
        let pt = eng.schedule(
            propose_at,
            EventKind::TimerFire,
            node,
            0,
            0,
            TmMsg::ProposeTimeout { h, r },
        )?;
        let rt = eng.schedule(
            round_at,
            EventKind::TimerFire,
            node,
            0,
            0,
            TmMsg::RoundTimeout { h, r },
        )?;
        let st = &mut self.nodes[node as usize];
        st.propose_timer = Some(pt);
        st.round_timer = Some(rt);

        if self.leader(h, r) == node {
            self.propose(eng, node, h, r)?;
        }
        self.recheck(eng, node)?;
        Ok(())
    }

    fn propose(&mut self, eng: &mut Engine<TmMsg>, node: NodeId, h: u64, r: u32) -> Result<(), SimError> {
        if self.equivocates(node) {
            // Two fresh junk blocks, one per half of the network.
            let a = TmBlock {
                id: self.net.fresh_id(),
                batch: 0,
            };
            let b = TmBlock {
                id: self.net.fresh_id(),
                batch: 0,
            };
            let half = self.n / 2;
            let msg = self.net.fresh_id();
            self.net.broadcast(eng, node, 0, self.proposal_bits, msg, |recv| {
                TmMsg::Proposal {
                    h,
                    r,
                    sender: node,
                    block: if recv < half { a } else { b },
                }
            })?;
            self.nodes[node as usize].proposals.insert((h, r), a);
            self.nodes[node as usize].blocks.insert(a.id, a);
            return Ok(());
        }
        let block = match self.nodes[node as usize].locked {
            Some(locked) => locked,
            None => {
                let batch = self.height_batch(eng, h);
                TmBlock {
                    id: self.net.fresh_id(),
                    batch,
                }
            }
        };
        let msg = self.net.fresh_id();
        self.net.broadcast(eng, node, 0, self.proposal_bits, msg, |_| TmMsg::Proposal {
            h,
            r,
            sender: node,
            block,
        })?;
        let st = &mut self.nodes[node as usize];
        st.proposals.insert((h, r), block);
        st.blocks.insert(block.id, block);
        Ok(())
    }

    fn send_vote(
        &mut self,
        eng: &mut Engine<TmMsg>,
        node: NodeId,
        phase: Phase,
        h: u64,
        r: u32,
        v: Option<TmBlock>,
    ) -> Result<(), SimError> {
        self.nodes[node as usize].record_vote(node, h, r, phase, v);
        let msg = self.net.fresh_id();
        let split = self.equivocates(node);
        let half = self.n / 2;
        self.net.broadcast(eng, node, 0, self.vote_bits, msg, |recv| {
            let vv = if split && recv >= half { None } else { v };
            if phase {
                TmMsg::Precommit {
                    h,
                    r,
                    sender: node,
                    v: vv,
                }
            } else {
                TmMsg::Prevote {
                    h,
                    r,
                    sender: node,
                    v: vv,
                }
            }
        })?;
        Ok(())
    }

    /// Drive one node's state machine to its fixpoint: proposal present ->
    /// prevote; prevote quorum -> lock + precommit; precommit quorum ->
    /// commit and next height.
    fn recheck(&mut self, eng: &mut Engine<TmMsg>, node: NodeId) -> Result<(), SimError> {
        loop {
            if self.nodes[node as usize].done {
                return Ok(());
            }
            let (h, r, step) = {
                let st = &self.nodes[node as usize];
                (st.h, st.r, st.step)
            };
            // Commit has priority and may come from any round of the height.
            if let Some((vr, block)) = self.nodes[node as usize].commit_candidate(h, self.quorum) {
                self.commit(eng, node, h, vr, block)?;
                continue;
            }
            match step {
                Step::Propose => {
                    let proposal = self.nodes[node as usize].proposals.get(&(h, r)).copied();
                    let Some(block) = proposal else {
                        return Ok(());
                    };
                    if let Some(t) = self.nodes[node as usize].propose_timer.take() {
                        eng.cancel(t);
                    }
                    let vote = self.nodes[node as usize].locked.or(Some(block));
                    self.nodes[node as usize].step = Step::Prevote;
                    self.send_vote(eng, node, false, h, r, vote)?;
                }
                Step::Prevote => {
                    let Some(value) = self.nodes[node as usize].quorum_value(h, r, false, self.quorum)
                    else {
                        return Ok(());
                    };
                    let vote = value.map(|id| self.nodes[node as usize].blocks[&id]);
                    if let Some(block) = vote {
                        self.nodes[node as usize].locked = Some(block);
                    }
                    self.nodes[node as usize].step = Step::Precommit;
                    self.send_vote(eng, node, true, h, r, vote)?;
                }
                Step::Precommit => return Ok(()), // only a commit or timeout moves us on
            }
        }
    }

    fn commit(
        &mut self,
        eng: &mut Engine<TmMsg>,
        node: NodeId,
        h: u64,
        round: u32,
        block: TmBlock,
    ) -> Result<(), SimError> {
        if self.is_honest(node) {
            match self.committed.get(&h) {
                Some(&(id, _, _, _)) => {
                    if id != block.id {
                        self.safety_violation = true;
                    }
                }
                None => {
                    self.committed
                        .insert(h, (block.id, block.batch, eng.now().steps(), round + 1));
                }
            }
            if block.batch != 0 && self.nodes[node as usize].delivered.insert(block.batch) {
                eng.mark(EventKind::Delivery, node, self.payload_bits, block.batch);
            }
        }
        {
            let st = &mut self.nodes[node as usize];
            if let Some(t) = st.propose_timer.take() {
                eng.cancel(t);
            }
            if let Some(t) = st.round_timer.take() {
                eng.cancel(t);
            }
            st.h = h + 1;
            st.locked = None;
            st.prune_below(h + 1);
            if st.h > self.heights {
                st.done = true;
            }
        }
        if !self.nodes[node as usize].done {
            self.enter_round(eng, node, 0)?;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<TmMsg>, ev: Event<TmMsg>) -> Result<(), SimError> {
        if ev.kind == EventKind::MessageDelivery {
            self.net.delivered(&ev);
        }
        let node = ev.node;
        // A silent corrupt node consumes deliveries but runs no state
        // machine — otherwise it would happily propose when its turn came.
        if !self.participates(node) || self.nodes[node as usize].done {
            return Ok(());
        }
        match ev.payload {
            TmMsg::Proposal { h, r, sender, block } => {
                if h < self.nodes[node as usize].h || sender != self.leader(h, r) {
                    return Ok(());
                }
                let st = &mut self.nodes[node as usize];
                st.proposals.entry((h, r)).or_insert(block);
                st.blocks.insert(block.id, block);
                self.recheck(eng, node)?;
            }
            TmMsg::Prevote { h, r, sender, v } => {
                self.nodes[node as usize].record_vote(sender, h, r, false, v);
                self.recheck(eng, node)?;
            }
            TmMsg::Precommit { h, r, sender, v } => {
                self.nodes[node as usize].record_vote(sender, h, r, true, v);
                self.recheck(eng, node)?;
            }
            TmMsg::ProposeTimeout { h, r } => {
                let st = &self.nodes[node as usize];
                if st.h == h && st.r == r && st.step == Step::Propose {
                    self.nodes[node as usize].step = Step::Prevote;
                    self.nodes[node as usize].propose_timer = None;
                    // Nothing worth proposing arrived in time.
                    let vote = self.nodes[node as usize].locked;
                    self.send_vote(eng, node, false, h, r, vote)?;
                    self.recheck(eng, node)?;
                }
            }
            TmMsg::RoundTimeout { h, r } => {
                let st = &self.nodes[node as usize];
                if st.h == h && st.r == r {
                    self.enter_round(eng, node, r + 1)?;
                }
            }
        }
        Ok(())
    }
}

pub fn run_tendermint(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    cfg.validate()?;
    if cfg.protocol != ProtocolKind::Tendermint {
        return Err(RunError::BadConfig("not a rotating-leader BFT config".into()));
    }
    if !matches!(
        cfg.proto.strategy,
        ByzStrategy::Silent | ByzStrategy::Equivocate | ByzStrategy::DelayMax | ByzStrategy::Mimic
    ) {
        return Err(RunError::BadConfig(format!(
            "strategy {} is not meaningful for rotating-leader BFT",
            cfg.proto.strategy.name()
        )));
    }
    let p = &cfg.params;
    let mut root = RngStream::root(cfg.seed);
    let mut corrupt_rng = root.fork("corrupt")?;
    let corruption = CorruptionMap::sample(p, cfg.corruption, &mut corrupt_rng)?;
    let mut eng: Engine<TmMsg> = Engine::new(
        cfg.digest(),
        p.n,
        corruption.byzantine().clone(),
        cfg.trace_mode,
    );
    if let Some(cap) = cfg.event_cap {
        eng.set_event_cap(cap);
    }
    let sizes = SizeModel::new(p.kappa);
    let mut net: Network<TmMsg> = Network::new(
        p.delta,
        cfg.mode,
        cfg.policy,
        corruption.clone(),
        root.fork("net")?,
        false,
    );
    if cfg.proto.strategy == ByzStrategy::DelayMax {
        for &b in corruption.byzantine() {
            net.mark_slow_sender(b);
        }
    }
    let f = corruption.byz_count() as u64;
    let horizon = (f + 1) * cfg.proto.timeout_factor * p.delta + 4 * p.delta;
    let mut run = TmRun {
        n: p.n,
        quorum: (2 * p.n / 3) + 1,
        heights: cfg.rounds,
        tf: cfg.proto.timeout_factor,
        delta: p.delta,
        strategy: cfg.proto.strategy,
        vote_bits: sizes.vote(),
        proposal_bits: p.b + SizeModel::HEADER_BITS,
        payload_bits: p.b,
        queue: BatchQueue::new(p.b, &corruption),
        net,
        nodes: (0..p.n).map(|_| TmNode::new()).collect(),
        height_batch: HashMap::new(),
        committed: BTreeMap::new(),
        safety_violation: false,
    };
    run.boot(&mut eng)?;
    eng.run(Stop::Quiescent, |eng, ev| run.handle(eng, ev))?;

    let commits = run
        .committed
        .iter()
        .map(|(&h, &(_, batch, time, rounds_used))| HeightCommit {
            height: h,
            rounds_used,
            commit_time: time,
            batch,
        })
        .collect();
    let stats = TendermintStats {
        commits,
        safety_violation: run.safety_violation,
    };
    let end_time = eng.now().steps();
    Ok(RunArtifacts {
        trace: eng.into_trace(),
        ledger: run.net.into_ledger(),
        corruption,
        stats: ProtoStats::Tendermint(stats),
        horizon,
        end_time,
    })
}
