//! Block-DAG runner: every node mines at a fixed per-step rate, each block
//! references all tips of its producer's current view, and a batch counts
//! as confirmed at a node once enough honest blocks sit above the block
//! that embedded it.
//!
//! The confirmation depth is `ceil(log2(1/epsilon))`, and a node also waits
//! one full message delay past its first sight of the embedding block, so
//! the block has reached everyone before the vote mass above it is read.
//! Unlike the chain runners there is no fork choice and no orphaning:
//! parallel blocks all enter the DAG, which is why throughput survives a
//! block rate far above one per delay. Conflicts are the one thing the
//! ordering leaves open; a configured equivocation mints a conflicting
//! batch pair that is withheld from every block, and the pair is reported
//! so the ordering checker can verify neither side was ever delivered.

use std::collections::{HashMap, VecDeque};

use tobsim_engine::{
    Engine, Event, EventKind, MsgId, NodeId, RngStream, SimError, Stop, VirtualTime,
};
use tobsim_net::{frac_to_f64, CorruptionMap, Network, SizeModel};

use crate::common::{
    BatchQueue, ByzStrategy, ProtoStats, ProtocolKind, RunArtifacts, RunConfig, SpectreStats,
    TxConfirm,
};
use crate::RunError;

#[derive(Debug, Clone, Copy)]
enum SpMsg {
    Tick,
    Block(u32),
    Check { batch: MsgId },
}

struct DagBlock {
    honest: bool,
    batch: MsgId,
    refs: Vec<u32>,
}

/// Confirmation progress for one watched batch at one node.
struct Watch {
    target: u32,
    /// Per-block flag: does this block descend from the target?
    desc: Vec<bool>,
    honest_above: u32,
    seen_at: u64,
}

#[derive(Default)]
struct LearnResult {
    /// Batches whose embedding block this node just saw for the first time.
    new_watches: Vec<MsgId>,
    /// Batches that crossed the confirmation threshold during this call.
    confirmed: Vec<MsgId>,
}

/// One node's partial, causally buffered copy of the DAG.
#[derive(Default)]
struct DagView {
    known: Vec<bool>,
    tips: Vec<u32>,
    /// parent block -> blocks waiting for it.
    waiting: HashMap<u32, Vec<u32>>,
    /// buffered block -> how many of its parents are still unknown.
    missing: HashMap<u32, usize>,
    watch: HashMap<MsgId, Watch>,
    done: Vec<MsgId>,
}

impl DagView {
    fn knows(&self, block: u32) -> bool {
        self.known.get(block as usize).copied().unwrap_or(false)
    }

    /// Incorporate `block` (buffering it if parents are missing), flush any
    /// blocks that were waiting on it, and report watch transitions.
    fn learn(
        &mut self,
        arena: &[DagBlock],
        block: u32,
        now: u64,
        conf_target: u32,
        delta: u64,
    ) -> LearnResult {
        let mut out = LearnResult::default();
        if self.knows(block) || self.missing.contains_key(&block) {
            return out;
        }
        let unknown: Vec<u32> = arena[block as usize]
            .refs
            .iter()
            .copied()
            .filter(|&r| !self.knows(r))
            .collect();
        if !unknown.is_empty() {
            self.missing.insert(block, unknown.len());
            for parent in unknown {
                self.waiting.entry(parent).or_default().push(block);
            }
            return out;
        }
        let mut stack = vec![block];
        while let Some(b) = stack.pop() {
            self.incorporate(arena, b, now, &mut out);
            if let Some(children) = self.waiting.remove(&b) {
                for child in children {
                    let left = self.missing.get_mut(&child).expect("buffered child");
                    *left -= 1;
                    if *left == 0 {
                        self.missing.remove(&child);
                        stack.push(child);
                    }
                }
            }
        }
        self.sweep(now, conf_target, delta, &mut out);
        out
    }

    fn incorporate(&mut self, arena: &[DagBlock], b: u32, now: u64, out: &mut LearnResult) {
        let idx = b as usize;
        if self.known.len() <= idx {
            self.known.resize(idx + 1, false);
        }
        self.known[idx] = true;
        let meta = &arena[idx];
        self.tips.retain(|t| !meta.refs.contains(t));
        self.tips.push(b);
        for w in self.watch.values_mut() {
            if b == w.target {
                continue;
            }
            if meta.refs.iter().any(|&r| w.desc.get(r as usize).copied().unwrap_or(false)) {
                if w.desc.len() <= idx {
                    w.desc.resize(idx + 1, false);
                }
                w.desc[idx] = true;
                if meta.honest {
                    w.honest_above += 1;
                }
            }
        }
        if meta.batch != 0 && !self.done.contains(&meta.batch) && !self.watch.contains_key(&meta.batch)
        {
            let mut desc = vec![false; idx + 1];
            desc[idx] = true;
            self.watch.insert(
                meta.batch,
                Watch {
                    target: b,
                    desc,
                    honest_above: 0,
                    seen_at: now,
                },
            );
            out.new_watches.push(meta.batch);
        }
    }

    fn sweep(&mut self, now: u64, conf_target: u32, delta: u64, out: &mut LearnResult) {
        let ready: Vec<MsgId> = self
            .watch
            .iter()
            .filter(|(_, w)| w.honest_above >= conf_target && now >= w.seen_at + delta)
            .map(|(&batch, _)| batch)
            .collect();
        for batch in ready {
            self.watch.remove(&batch);
            self.done.push(batch);
            out.confirmed.push(batch);
        }
    }

    /// Timer path: the message-delay gate has elapsed; confirm if the depth
    /// was already there.
    fn due(&mut self, batch: MsgId, conf_target: u32) -> bool {
        let ready = self
            .watch
            .get(&batch)
            .is_some_and(|w| w.honest_above >= conf_target);
        if ready {
            self.watch.remove(&batch);
            self.done.push(batch);
        }
        ready
    }
}

struct SpectreRun {
    strategy: ByzStrategy,
    net: Network<SpMsg>,
    corruption: CorruptionMap,
    arena: Vec<DagBlock>,
    views: Vec<DagView>,
    queue: BatchQueue,
    pending: VecDeque<MsgId>,
    mint_time: HashMap<MsgId, u64>,
    confirms_left: HashMap<MsgId, u32>,
    election: RngStream,
    rate_num: u64,
    rate_den: u64,
    conf_target: u32,
    n: u32,
    honest_count: u32,
    delta: u64,
    payload_bits: u64,
    kappa: u64,
    prod_steps: u64,
    minted: u64,
    mint_target: u64,
    stats: SpectreStats,
}

impl SpectreRun {
    fn confirm(&mut self, eng: &mut Engine<SpMsg>, node: NodeId, batch: MsgId) {
        let now = eng.now().steps();
        eng.mark(EventKind::Delivery, node, self.payload_bits, batch);
        let left = self.confirms_left.get_mut(&batch).expect("tracked batch");
        *left -= 1;
        if *left == 0 {
            self.confirms_left.remove(&batch);
            self.stats.confirmed.push(TxConfirm {
                batch,
                broadcast_time: self.mint_time[&batch],
                final_time: now,
            });
        }
    }

    fn absorb(
        &mut self,
        eng: &mut Engine<SpMsg>,
        node: NodeId,
        block: u32,
    ) -> Result<(), SimError> {
        let now = eng.now().steps();
        let out = self.views[node as usize].learn(
            &self.arena,
            block,
            now,
            self.conf_target,
            self.delta,
        );
        if !self.corruption.is_honest(node) {
            return Ok(());
        }
        for batch in out.new_watches {
            eng.schedule(
                VirtualTime(now + self.delta),
                EventKind::TimerFire,
                node,
                0,
                0,
                SpMsg::Check { batch },
            )?;
        }
        for batch in out.confirmed {
            self.confirm(eng, node, batch);
        }
        Ok(())
    }

    fn tick(&mut self, eng: &mut Engine<SpMsg>) -> Result<(), SimError> {
        let t = eng.now().steps();
        if t % self.delta == 0 && self.minted < self.mint_target {
            let id = self.net.fresh_id();
            self.queue.mint(eng, id, None);
            self.pending.push_back(id);
            self.mint_time.insert(id, t);
            self.confirms_left.insert(id, self.honest_count);
            self.minted += 1;
        }
        for node in 0..self.n {
            if !self.election.bernoulli_ratio(self.rate_num, self.rate_den) {
                continue;
            }
            let byz = self.corruption.is_byzantine(node);
            if byz && self.strategy == ByzStrategy::Silent {
                continue;
            }
            let batch = if !byz || self.strategy == ByzStrategy::Mimic {
                self.pending.pop_front().unwrap_or(0)
            } else {
                0
            };
            let refs = self.views[node as usize].tips.clone();
            let bits = self.payload_bits + self.kappa * refs.len() as u64 + SizeModel::HEADER_BITS;
            self.arena.push(DagBlock {
                honest: !byz,
                batch,
                refs,
            });
            let id = (self.arena.len() - 1) as u32;
            self.stats.blocks_total += 1;
            if byz {
                if batch == 0 && self.strategy != ByzStrategy::Mimic {
                    self.stats.junk_bits += bits;
                }
            } else {
                self.stats.honest_blocks += 1;
            }
            self.absorb(eng, node, id)?;
            let msg = self.net.fresh_id();
            let round = (t / self.delta) as u32;
            self.net
                .broadcast(eng, node, round, bits, msg, |_| SpMsg::Block(id))?;
        }
        if t + 1 <= self.prod_steps {
            eng.schedule(
                VirtualTime(t + 1),
                EventKind::ProtocolTick,
                0,
                0,
                0,
                SpMsg::Tick,
            )?;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<SpMsg>, ev: Event<SpMsg>) -> Result<(), SimError> {
        match ev.payload {
            SpMsg::Tick => self.tick(eng),
            SpMsg::Block(id) => {
                self.net.delivered(&ev);
                self.absorb(eng, ev.node, id)
            }
            SpMsg::Check { batch } => {
                if self.views[ev.node as usize].due(batch, self.conf_target) {
                    self.confirm(eng, ev.node, batch);
                }
                Ok(())
            }
        }
    }
}

/// Confirmation depth for acceptance risk `epsilon`.
fn confirmation_depth(epsilon: f64) -> u32 {
    ((1.0 / epsilon).log2().ceil() as u32).max(1)
}

pub fn run_spectre(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    cfg.validate()?;
    if cfg.protocol != ProtocolKind::Spectre {
        return Err(RunError::BadConfig("not a DAG config".into()));
    }
    if !matches!(
        cfg.proto.strategy,
        ByzStrategy::Silent | ByzStrategy::Junk | ByzStrategy::Mimic | ByzStrategy::Equivocate
    ) {
        return Err(RunError::BadConfig(format!(
            "strategy {} is not meaningful for the DAG runner",
            cfg.proto.strategy.name()
        )));
    }
    let p = &cfg.params;
    let rate = cfg.proto.spectre_rate.unwrap_or(p.p);
    if rate.numer() > rate.denom() || *rate.numer() == 0 {
        return Err(RunError::BadConfig("block rate must be in (0, 1]".into()));
    }
    let eps = frac_to_f64(cfg.proto.epsilon);
    if eps <= 0.0 || eps >= 1.0 {
        return Err(RunError::BadConfig("acceptance risk must be in (0, 1)".into()));
    }
    let conf_target = confirmation_depth(eps);
    let mut root = RngStream::root(cfg.seed);
    let mut corrupt_rng = root.fork("corrupt")?;
    let corruption = CorruptionMap::sample(p, cfg.corruption, &mut corrupt_rng)?;
    let mut eng: Engine<SpMsg> = Engine::new(
        cfg.digest(),
        p.n,
        corruption.byzantine().clone(),
        cfg.trace_mode,
    );
    if let Some(cap) = cfg.event_cap {
        eng.set_event_cap(cap);
    }
    let net = Network::new(
        p.delta,
        cfg.mode,
        cfg.policy,
        corruption.clone(),
        root.fork("net")?,
        cfg.trace_mode == tobsim_engine::TraceMode::Full,
    );
    // Aggregate honest block rate drives the confirmation drain time.
    let agg = (1.0 - frac_to_f64(p.alpha)) * p.n as f64 * frac_to_f64(rate);
    let drain = (2.0 * conf_target as f64 / agg).ceil() as u64 + 4 * p.delta;
    let mut run = SpectreRun {
        strategy: cfg.proto.strategy,
        net,
        corruption: corruption.clone(),
        arena: Vec::new(),
        views: (0..p.n).map(|_| DagView::default()).collect(),
        queue: BatchQueue::new(p.b, &corruption),
        pending: VecDeque::new(),
        mint_time: HashMap::new(),
        confirms_left: HashMap::new(),
        election: root.fork("election")?,
        rate_num: *rate.numer(),
        rate_den: *rate.denom(),
        conf_target,
        n: p.n,
        honest_count: corruption.honest_count(),
        delta: p.delta,
        payload_bits: p.b,
        kappa: p.kappa as u64,
        prod_steps: cfg.rounds * p.delta + drain,
        minted: 0,
        mint_target: cfg.rounds,
        stats: SpectreStats::default(),
    };
    if cfg.proto.strategy == ByzStrategy::Equivocate {
        if let Some(&byz) = corruption.byzantine().iter().next() {
            // A conflicting pair, announced but withheld from every block:
            // the ordering stays partial on exactly these two ids.
            for _ in 0..2 {
                let id = run.net.fresh_id();
                eng.mark(EventKind::Broadcast, byz, p.b, id);
                run.stats.conflicted.push(id);
            }
        }
    }
    let horizon = 4 * p.delta + (2.0 * conf_target as f64 / agg).ceil() as u64;
    eng.schedule(VirtualTime::ZERO, EventKind::ProtocolTick, 0, 0, 0, SpMsg::Tick)?;
    let stop = VirtualTime(run.prod_steps + p.delta + 1);
    eng.run(Stop::At(stop), |eng, ev| run.handle(eng, ev))?;

    let end_time = eng.now().steps();
    Ok(RunArtifacts {
        trace: eng.into_trace(),
        ledger: run.net.into_ledger(),
        corruption,
        stats: ProtoStats::Spectre(run.stats),
        horizon,
        end_time,
    })
}
