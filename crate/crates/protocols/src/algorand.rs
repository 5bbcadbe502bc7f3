//! Committee sortition rounds: private proposer and committee lotteries
//! with a fixed wall-clocked step schedule per round.
//!
//! Each node wins the proposer lottery with probability `1 - 2^(-kappa/n)`,
//! so a round has no proposer at all with probability exactly `2^-kappa`
//! (such a round is skipped after one message delay and the batch is
//! retried). Voting committees are re-drawn per step with per-node
//! probability `target/n`, where `target = ceil(kappa ln2 / (2 gap^2))` —
//! by Hoeffding, a committee's adversary share then exceeds `alpha + gap`
//! with probability at most `2^-kappa`. A round finalizes a fixed
//! `steps + 1` message delays after it starts, so latency does not depend
//! on n at all; what the lotteries buy is committee-sized vote traffic
//! instead of all-to-all voting.

use tobsim_engine::{
    Engine, Event, EventKind, MsgId, NodeId, RngStream, SimError, Stop, VirtualTime,
};
use tobsim_net::{frac_to_f64, BitLedger, CorruptionMap, DelayPolicy, SizeModel};

use crate::common::{
    AlgorandStats, BatchQueue, ByzStrategy, ProtoStats, ProtocolKind, RunArtifacts, RunConfig,
    SortitionRound,
};
use crate::RunError;

#[derive(Debug, Clone, Copy)]
enum AlgoMsg {
    Round,
    Finalize { batch: MsgId },
    Wave,
}

/// Committee size such that exceeding the honest margin `gap` has
/// probability at most `2^-kappa` (Hoeffding on `target` draws).
pub fn committee_target(kappa: u32, gap: f64) -> u32 {
    (kappa as f64 * std::f64::consts::LN_2 / (2.0 * gap * gap)).ceil() as u32
}

struct AlgoRun {
    n: u32,
    delta: u64,
    steps_r: u32,
    b: u64,
    strategy: ByzStrategy,
    policy: DelayPolicy,
    proposer_q: f64,
    committee_prob: f64,
    attempts_left: u64,
    corruption: CorruptionMap,
    honest: Vec<NodeId>,
    ledger: BitLedger,
    queue: BatchQueue,
    next_id: MsgId,
    sortition: RngStream,
    delays: RngStream,
    proposal_bits: u64,
    committee_vote_bits: u64,
    pending_batch: Option<MsgId>,
    batch_mint_time: u64,
    stats: AlgorandStats,
    max_span: u64,
}

impl AlgoRun {
    fn fresh(&mut self) -> MsgId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn delay(&mut self) -> u64 {
        match self.policy {
            DelayPolicy::Max => self.delta,
            DelayPolicy::Min => 1,
            DelayPolicy::Random => self.delays.between(1, self.delta),
        }
    }

    fn participates(&self, node: NodeId) -> bool {
        self.corruption.is_honest(node) || self.strategy == ByzStrategy::Mimic
    }

    /// One aggregated wave: `senders` nodes each sent `each_bits` at
    /// `sent_at`; every honest receiver gets one event with the sum of what
    /// reached it.
    fn wave(
        &mut self,
        eng: &mut Engine<AlgoMsg>,
        sent_at: u64,
        senders: &[NodeId],
        each_bits: u64,
    ) -> Result<(), SimError> {
        if senders.is_empty() {
            return Ok(());
        }
        let honest = self.honest.clone();
        for j in honest {
            let from_others = senders.len() as u64 - senders.contains(&j) as u64;
            if from_others == 0 {
                continue;
            }
            let at = sent_at + self.delay();
            let id = self.fresh();
            eng.schedule(
                VirtualTime(at),
                EventKind::MessageDelivery,
                j,
                from_others * each_bits,
                id,
                AlgoMsg::Wave,
            )?;
        }
        Ok(())
    }

    fn round(&mut self, eng: &mut Engine<AlgoMsg>) -> Result<(), SimError> {
        let t_r = eng.now().steps();
        self.attempts_left -= 1;
        let round_idx = self.stats.rounds.len() as u64;
        let batch = match self.pending_batch {
            Some(b) => b,
            None => {
                let id = self.fresh();
                self.queue.mint(eng, id, None);
                self.pending_batch = Some(id);
                self.batch_mint_time = t_r;
                id
            }
        };

        let winners: Vec<NodeId> = (0..self.n)
            .filter(|_| self.sortition.bernoulli_f64(self.proposer_q))
            .collect();
        let visible: Vec<NodeId> = winners
            .iter()
            .copied()
            .filter(|&w| self.participates(w))
            .collect();

        if visible.is_empty() {
            self.stats.empty_rounds += 1;
            self.stats.rounds.push(SortitionRound {
                round: round_idx,
                proposers: winners.len() as u32,
                committee_sizes: Vec::new(),
                committee_byz_max: 0.0,
                finalized: false,
            });
            if self.attempts_left > 0 {
                eng.schedule(
                    VirtualTime(t_r + self.delta),
                    EventKind::ProtocolTick,
                    0,
                    0,
                    0,
                    AlgoMsg::Round,
                )?;
            }
            return Ok(());
        }

        self.wave(eng, t_r, &visible, self.proposal_bits)?;

        let mut committee_sizes = Vec::with_capacity(self.steps_r as usize);
        let mut byz_max = 0.0f64;
        for s in 1..=self.steps_r {
            let members: Vec<NodeId> = (0..self.n)
                .filter(|_| self.sortition.bernoulli_f64(self.committee_prob))
                .collect();
            committee_sizes.push(members.len() as u32);
            if !members.is_empty() {
                let byz = members
                    .iter()
                    .filter(|&&m| self.corruption.is_byzantine(m))
                    .count();
                byz_max = byz_max.max(byz as f64 / members.len() as f64);
            }
            let voters: Vec<NodeId> = members
                .into_iter()
                .filter(|&m| self.participates(m))
                .collect();
            self.wave(eng, t_r + s as u64 * self.delta, &voters, self.committee_vote_bits)?;
        }

        self.stats.rounds.push(SortitionRound {
            round: round_idx,
            proposers: winners.len() as u32,
            committee_sizes,
            committee_byz_max: byz_max,
            finalized: true,
        });
        eng.schedule(
            VirtualTime(t_r + (self.steps_r as u64 + 1) * self.delta),
            EventKind::ProtocolTick,
            0,
            0,
            0,
            AlgoMsg::Finalize { batch },
        )?;
        Ok(())
    }

    fn finalize(&mut self, eng: &mut Engine<AlgoMsg>, batch: MsgId) -> Result<(), SimError> {
        let now = eng.now().steps();
        let honest = self.honest.clone();
        for &j in &honest {
            eng.mark(EventKind::Delivery, j, self.b, batch);
        }
        self.pending_batch = None;
        self.max_span = self.max_span.max(now - self.batch_mint_time);
        if self.attempts_left > 0 {
            eng.schedule(VirtualTime(now), EventKind::ProtocolTick, 0, 0, 0, AlgoMsg::Round)?;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<AlgoMsg>, ev: Event<AlgoMsg>) -> Result<(), SimError> {
        match ev.payload {
            AlgoMsg::Round => self.round(eng),
            AlgoMsg::Finalize { batch } => self.finalize(eng, batch),
            AlgoMsg::Wave => {
                self.ledger.credit(ev.node, ev.msg_id, ev.size_bits);
                Ok(())
            }
        }
    }
}

pub fn run_algorand(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    cfg.validate()?;
    if cfg.protocol != ProtocolKind::Algorand {
        return Err(RunError::BadConfig("not a sortition config".into()));
    }
    if !matches!(cfg.proto.strategy, ByzStrategy::Silent | ByzStrategy::Mimic) {
        return Err(RunError::BadConfig(format!(
            "strategy {} is not meaningful for sortition rounds",
            cfg.proto.strategy.name()
        )));
    }
    let p = &cfg.params;
    let mut root = RngStream::root(cfg.seed);
    let mut corrupt_rng = root.fork("corrupt")?;
    let corruption = CorruptionMap::sample(p, cfg.corruption, &mut corrupt_rng)?;
    let sizes = SizeModel::new(p.kappa);
    let gap = frac_to_f64(cfg.proto.committee_gap);
    if gap <= 0.0 || gap >= 1.0 {
        return Err(RunError::BadConfig("committee margin must be in (0, 1)".into()));
    }
    let target = committee_target(p.kappa, gap);
    let mut eng: Engine<AlgoMsg> = Engine::new(
        cfg.digest(),
        p.n,
        corruption.byzantine().clone(),
        cfg.trace_mode,
    );
    if let Some(cap) = cfg.event_cap {
        eng.set_event_cap(cap);
    }
    let mut run = AlgoRun {
        n: p.n,
        delta: p.delta,
        steps_r: cfg.proto.steps_r,
        b: p.b,
        strategy: cfg.proto.strategy,
        policy: cfg.policy,
        proposer_q: 1.0 - 2f64.powf(-(p.kappa as f64) / p.n as f64),
        committee_prob: (target as f64 / p.n as f64).min(1.0),
        attempts_left: cfg.rounds,
        honest: corruption.honest_iter().collect(),
        ledger: BitLedger::new(false),
        queue: BatchQueue::new(p.b, &corruption),
        corruption: corruption.clone(),
        next_id: 1,
        sortition: root.fork("sortition")?,
        delays: root.fork("delays")?,
        proposal_bits: p.b + sizes.vrf_proof() + SizeModel::HEADER_BITS,
        committee_vote_bits: sizes.vote() + sizes.vrf_proof(),
        pending_batch: None,
        batch_mint_time: 0,
        stats: AlgorandStats {
            rounds: Vec::new(),
            committee_target: target,
            empty_rounds: 0,
        },
        max_span: 0,
    };
    eng.schedule(VirtualTime::ZERO, EventKind::ProtocolTick, 0, 0, 0, AlgoMsg::Round)?;
    eng.run(Stop::Quiescent, |eng, ev| run.handle(eng, ev))?;

    let end_time = eng.now().steps();
    let horizon = run.max_span + p.delta;
    Ok(RunArtifacts {
        trace: eng.into_trace(),
        ledger: run.ledger,
        corruption,
        stats: ProtoStats::Algorand(run.stats),
        horizon,
        end_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tobsim_net::{frac, CorruptionStrategy, ModelParams};

    fn config(n: u32, byz: u64, kappa: u32, rounds: u64, seed: u64) -> RunConfig {
        let params = ModelParams {
            n,
            delta: 1,
            alpha: frac(byz, n as u64),
            kappa,
            p: frac(1, 1),
            b: 4096,
        };
        let mut cfg = RunConfig::new(ProtocolKind::Algorand, params, seed);
        cfg.rounds = rounds;
        cfg.corruption = CorruptionStrategy::WorstCase;
        cfg
    }

    fn stats(art: &RunArtifacts) -> &AlgorandStats {
        match &art.stats {
            ProtoStats::Algorand(s) => s,
            _ => panic!("wrong stats"),
        }
    }

    #[test]
    fn target_formula_matches_hand_values() {
        assert_eq!(committee_target(16, 1.0 / 3.0), 50);
        assert_eq!(committee_target(8, 1.0 / 3.0), 25);
        assert_eq!(committee_target(8, 5.0 / 12.0), 16);
    }

    #[test]
    fn fault_free_rounds_finalize_on_schedule_with_exact_bits() {
        let cfg = config(16, 0, 16, 5, 2);
        let art = run_algorand(&cfg).unwrap();
        let s = stats(&art);
        assert_eq!(s.empty_rounds, 0);
        assert_eq!(s.committee_target, 50);
        // Latency is exactly (steps + 1) message delays for every batch.
        let mut bcast = std::collections::BTreeMap::new();
        let mut deliveries = 0;
        for m in art.trace.markers() {
            match m.kind {
                EventKind::Broadcast => {
                    bcast.insert(m.msg_id, m.time);
                }
                EventKind::Delivery => {
                    deliveries += 1;
                    assert_eq!(m.time - bcast[&m.msg_id], 10);
                }
                _ => {}
            }
        }
        assert_eq!(deliveries, 5 * 16);
        // Ledger total re-derived from the per-round stats: w proposals and
        // c_s votes, each heard by n-1 of the n honest nodes.
        let prop = 4096 + 32 + 64;
        let vote = (2 * 16 + 64) + 32;
        let expected: u64 = s
            .rounds
            .iter()
            .map(|r| {
                let votes: u64 = r.committee_sizes.iter().map(|&c| c as u64).sum();
                r.proposers as u64 * 15 * prop + votes * 15 * vote
            })
            .sum();
        assert_eq!(art.ledger.total(), expected);
    }

    #[test]
    fn proposerless_rounds_skip_after_one_delay() {
        // kappa=1: a round is empty with probability 1/2.
        let cfg = config(64, 0, 1, 60, 5);
        let art = run_algorand(&cfg).unwrap();
        let s = stats(&art);
        assert!(s.empty_rounds > 10, "empty rounds {}", s.empty_rounds);
        assert_eq!(
            s.empty_rounds as usize,
            s.rounds.iter().filter(|r| !r.finalized).count()
        );
        let finalized = s.rounds.iter().filter(|r| r.finalized).count();
        let deliveries = art
            .trace
            .markers()
            .iter()
            .filter(|m| m.kind == EventKind::Delivery)
            .count();
        assert_eq!(deliveries, finalized * 64);
        assert_eq!(s.rounds.len(), 60);
    }

    #[test]
    fn silent_adversary_keeps_rounds_alive_and_committees_tracked() {
        let cfg = {
            let mut c = config(32, 8, 16, 10, 7);
            c.proto.strategy = ByzStrategy::Silent;
            c
        };
        let art = run_algorand(&cfg).unwrap();
        let s = stats(&art);
        assert_eq!(s.rounds.iter().filter(|r| r.finalized).count(), 10);
        // A quarter of the nodes are corrupt; some step committee sees them.
        let max_share = s
            .rounds
            .iter()
            .map(|r| r.committee_byz_max)
            .fold(0.0f64, f64::max);
        assert!(max_share > 0.0);
        // Hoeffding margin: shares beyond alpha + gap are 2^-16 events.
        assert!(max_share < 0.25 + 1.0 / 3.0, "share {max_share}");
    }

    #[test]
    fn committee_margin_holds_at_the_hoeffding_rate() {
        // Independent oracle for the target formula: draw committees
        // directly and compare the tail frequency against 2^-kappa.
        let kappa = 4u32;
        let gap = 1.0 / 3.0;
        let target = committee_target(kappa, gap);
        let n = 40u32;
        let byz = 10u32; // alpha = 0.25
        let prob = target as f64 / n as f64;
        let mut rng = RngStream::root(99);
        let trials = 20_000;
        let mut exceed = 0;
        for _ in 0..trials {
            let mut size = 0u32;
            let mut bad = 0u32;
            for node in 0..n {
                if rng.bernoulli_f64(prob) {
                    size += 1;
                    if node < byz {
                        bad += 1;
                    }
                }
            }
            if size > 0 && bad as f64 / size as f64 >= 0.25 + gap {
                exceed += 1;
            }
        }
        let rate = exceed as f64 / trials as f64;
        let bound = 2f64.powi(-(kappa as i32));
        assert!(
            rate <= bound * 1.5,
            "tail rate {rate} vs Hoeffding bound {bound}"
        );
    }

    #[test]
    fn runs_replay_identically() {
        let mut cfg = config(16, 4, 16, 4, 13);
        cfg.trace_mode = tobsim_engine::TraceMode::Full;
        let a = run_algorand(&cfg).unwrap();
        let b = run_algorand(&cfg).unwrap();
        assert_eq!(a.trace.serialize(), b.trace.serialize());
    }
}
