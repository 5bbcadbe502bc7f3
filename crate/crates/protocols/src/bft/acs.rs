//! The asynchronous committee pipeline: n parallel reliable broadcasts
//! feed n binary agreements; the union of inputs whose agreement said
//! "include" is the epoch's common subset, delivered in one order
//! everywhere.
//!
//! The run is measured under adversarial scheduling (the config must use
//! the max delay policy), so every phase takes its full `delta` and the
//! whole epoch is delta-quantized:
//!
//! * t0: every participating node broadcasts its input (three waves,
//!   delivering at t0+3d; delay-maximizing proposers lag two more);
//! * t0+4d: agreements on punctually-delivered inputs decide "include"
//!   unanimously — that is `n - f` of them, enough to close the subset,
//!   and remaining instances get input 0;
//! * stalled instances run on: silent proposers resolve to "exclude" one
//!   round later, delay-maximized ones are adversarially mixed and take a
//!   Geometric(1/2) number of extra rounds;
//! * once all n agreements decide, one decryption-share wave releases the
//!   batch contents and every included input is delivered.
//!
//! Waves are aggregated: one delivery event per (instance, phase,
//! receiver) carrying the wave's summed bits, which keeps the event count
//! at O(n^2) per epoch while the ledger stays bit-exact.

use tobsim_engine::{
    Engine, Event, EventKind, MsgId, NodeId, RngStream, SimError, Stop, VirtualTime,
};
use tobsim_net::{BitLedger, CorruptionMap, SizeModel};

use crate::bft::ba::{ba_forced, ba_round_bits, ba_unanimous};
use crate::bft::rbc::{ceil_log2, rbc_bits};
use crate::common::{
    BatchQueue, ByzStrategy, EpochStats, HoneyBadgerStats, ProtoStats, ProtocolKind, RunArtifacts,
    RunConfig,
};
use crate::RunError;

#[derive(Debug, Clone, Copy)]
enum HbMsg {
    EpochStart,
    Finalize,
    Wave,
}

/// Total payload bits an epoch carries across all nodes.
pub(crate) fn epoch_batch_bits(b: u64, n: u32, kappa: u32, scaled: bool) -> u64 {
    if scaled {
        b * (n as u64) * (n as u64) * ceil_log2(n).max(1) as u64 * kappa as u64
    } else {
        b
    }
}

struct HbRun {
    n: u32,
    f: u32,
    kappa: u32,
    delta: u64,
    strategy: ByzStrategy,
    epochs: u64,
    epoch: u64,
    epoch_t0: u64,
    input_bits: u64,
    vote_bits: u64,
    corruption: CorruptionMap,
    honest: Vec<NodeId>,
    participants: Vec<NodeId>,
    ledger: BitLedger,
    queue: BatchQueue,
    next_id: MsgId,
    ba_root: RngStream,
    stats: HoneyBadgerStats,
    /// Current epoch's included input batches, in proposer order.
    included: Vec<MsgId>,
    pending_stats: Option<EpochStats>,
    max_span: u64,
}

impl HbRun {
    fn fresh(&mut self) -> MsgId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn wave(
        &mut self,
        eng: &mut Engine<HbMsg>,
        at: u64,
        receiver: NodeId,
        bits: u64,
    ) -> Result<(), SimError> {
        let id = self.fresh();
        eng.schedule(
            VirtualTime(at),
            EventKind::MessageDelivery,
            receiver,
            bits,
            id,
            HbMsg::Wave,
        )?;
        Ok(())
    }

    fn start_epoch(&mut self, eng: &mut Engine<HbMsg>) -> Result<(), SimError> {
        let t0 = eng.now().steps();
        self.epoch_t0 = t0;
        let d = self.delta;
        let e = self.epoch;
        let mut rng = self
            .ba_root
            .fork(&format!("e{e}"))
            .map_err(|err| SimError::Handler(err.to_string()))?;
        let cost = rbc_bits(self.n, self.f, self.kappa, self.input_bits);
        let peers = (self.participants.len() - 1) as u32;
        let close_time = t0 + 4 * d;
        let mut t_all = close_time;

        let mut ba_rounds = vec![0u32; self.n as usize];
        let mut included: Vec<MsgId> = Vec::new();
        let mut included_honest = 0u32;
        let honest = self.honest.clone();

        for proposer in 0..self.n {
            let is_honest = self.corruption.is_honest(proposer);
            let participating = is_honest || self.strategy != ByzStrategy::Silent;
            let delaymax = !is_honest && self.strategy == ByzStrategy::DelayMax;
            // Input batch and the three broadcast waves.
            if participating {
                let batch = self.fresh();
                self.queue.mint(eng, batch, Some(proposer));
                let shift = if delaymax { 2 * d } else { 0 };
                for &j in &honest {
                    if j != proposer {
                        self.wave(eng, t0 + d + shift, j, cost.fragment_bits)?;
                    }
                    self.wave(
                        eng,
                        t0 + 2 * d + shift,
                        j,
                        peers as u64 * cost.fragment_bits,
                    )?;
                    self.wave(eng, t0 + 3 * d + shift, j, peers as u64 * cost.ready_bits)?;
                }
                // Agreement outcome for this instance.
                let (rounds, include, ba_start) = if delaymax {
                    let (g, v) = ba_forced(&mut rng);
                    (g, v, close_time)
                } else {
                    let (g, v) = ba_unanimous(true);
                    (g, v, t0 + 3 * d)
                };
                ba_rounds[proposer as usize] = rounds;
                let decide_at = ba_start + rounds as u64 * d;
                t_all = t_all.max(decide_at);
                for k in 1..=rounds {
                    let at = ba_start + k as u64 * d;
                    for &j in &honest {
                        self.wave(eng, at, j, ba_round_bits(peers, self.vote_bits))?;
                    }
                }
                if include {
                    if is_honest {
                        included_honest += 1;
                    }
                    included.push(batch);
                }
            } else {
                // Silent proposer: no broadcast ever completes; once the
                // subset closes everyone inputs 0 and one round excludes it.
                let (rounds, _) = ba_unanimous(false);
                ba_rounds[proposer as usize] = rounds;
                let decide_at = close_time + rounds as u64 * d;
                t_all = t_all.max(decide_at);
                for &j in &honest {
                    self.wave(eng, decide_at, j, ba_round_bits(peers, self.vote_bits))?;
                }
            }
        }

        let t_final = t_all + d;
        let share_bits = included.len() as u64 * self.kappa as u64 + 64;
        for &j in &honest {
            self.wave(eng, t_final, j, peers as u64 * share_bits)?;
        }
        self.pending_stats = Some(EpochStats {
            epoch: e,
            included_instances: included.len() as u32,
            included_honest_inputs: included_honest,
            ba_rounds,
            completion_time: t_final,
        });
        self.included = included;
        eng.schedule(
            VirtualTime(t_final),
            EventKind::ProtocolTick,
            0,
            0,
            0,
            HbMsg::Finalize,
        )?;
        Ok(())
    }

    fn finalize(&mut self, eng: &mut Engine<HbMsg>) -> Result<(), SimError> {
        let now = eng.now().steps();
        let honest = self.honest.clone();
        for batch in std::mem::take(&mut self.included) {
            for &j in &honest {
                eng.mark(EventKind::Delivery, j, self.input_bits, batch);
            }
        }
        let stats = self.pending_stats.take().expect("finalize without epoch");
        self.max_span = self.max_span.max(now - self.epoch_t0);
        self.stats.epochs.push(stats);
        self.epoch += 1;
        if self.epoch < self.epochs {
            eng.schedule(
                VirtualTime(now),
                EventKind::ProtocolTick,
                0,
                0,
                0,
                HbMsg::EpochStart,
            )?;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<HbMsg>, ev: Event<HbMsg>) -> Result<(), SimError> {
        match ev.payload {
            HbMsg::EpochStart => self.start_epoch(eng),
            HbMsg::Finalize => self.finalize(eng),
            HbMsg::Wave => {
                self.ledger.credit(ev.node, ev.msg_id, ev.size_bits);
                Ok(())
            }
        }
    }
}

pub fn run_honeybadger(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    cfg.validate()?;
    if cfg.protocol != ProtocolKind::HoneyBadger {
        return Err(RunError::BadConfig("not a committee-pipeline config".into()));
    }
    if !matches!(
        cfg.proto.strategy,
        ByzStrategy::Silent | ByzStrategy::DelayMax | ByzStrategy::Mimic
    ) {
        return Err(RunError::BadConfig(format!(
            "strategy {} is not meaningful for the committee pipeline",
            cfg.proto.strategy.name()
        )));
    }
    let p = &cfg.params;
    if p.n < 2 {
        return Err(RunError::BadConfig("the pipeline needs at least two nodes".into()));
    }
    let mut root = RngStream::root(cfg.seed);
    let mut corrupt_rng = root.fork("corrupt")?;
    let corruption = CorruptionMap::sample(p, cfg.corruption, &mut corrupt_rng)?;
    let sizes = SizeModel::new(p.kappa);
    let total_bits = epoch_batch_bits(p.b, p.n, p.kappa, cfg.proto.batch_scaled);
    let input_bits = (total_bits / p.n as u64).max(1);
    let honest: Vec<NodeId> = corruption.honest_iter().collect();
    let participants: Vec<NodeId> = (0..p.n)
        .filter(|&node| {
            corruption.is_honest(node) || cfg.proto.strategy != ByzStrategy::Silent
        })
        .collect();
    let mut eng: Engine<HbMsg> = Engine::new(
        cfg.digest(),
        p.n,
        corruption.byzantine().clone(),
        cfg.trace_mode,
    );
    if let Some(cap) = cfg.event_cap {
        eng.set_event_cap(cap);
    }
    let mut run = HbRun {
        n: p.n,
        f: corruption.byz_count(),
        kappa: p.kappa,
        delta: p.delta,
        strategy: cfg.proto.strategy,
        epochs: cfg.rounds,
        epoch: 0,
        epoch_t0: 0,
        input_bits,
        vote_bits: sizes.vote(),
        corruption: corruption.clone(),
        honest,
        participants,
        ledger: BitLedger::new(false),
        queue: BatchQueue::new(input_bits, &corruption),
        next_id: 1,
        ba_root: root.fork("ba")?,
        stats: HoneyBadgerStats::default(),
        included: Vec::new(),
        pending_stats: None,
        max_span: 0,
    };
    eng.schedule(VirtualTime::ZERO, EventKind::ProtocolTick, 0, 0, 0, HbMsg::EpochStart)?;
    eng.run(Stop::Quiescent, |eng, ev| run.handle(eng, ev))?;

    let end_time = eng.now().steps();
    let horizon = run.max_span + p.delta;
    Ok(RunArtifacts {
        trace: eng.into_trace(),
        ledger: run.ledger,
        corruption,
        stats: ProtoStats::HoneyBadger(run.stats),
        horizon,
        end_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tobsim_net::{frac, CorruptionStrategy, ModelParams};

    fn config(n: u32, byz: u64, b: u64, epochs: u64, seed: u64) -> RunConfig {
        let params = ModelParams {
            n,
            delta: 2,
            alpha: frac(byz, n as u64),
            kappa: 16,
            p: frac(1, 1),
            b,
        };
        let mut cfg = RunConfig::new(ProtocolKind::HoneyBadger, params, seed);
        cfg.rounds = epochs;
        cfg.corruption = CorruptionStrategy::WorstCase;
        cfg
    }

    fn stats(art: &RunArtifacts) -> &HoneyBadgerStats {
        match &art.stats {
            ProtoStats::HoneyBadger(s) => s,
            _ => panic!("wrong stats"),
        }
    }

    #[test]
    fn silent_epoch_ledger_matches_hand_computation() {
        // n=4, one silent byzantine, b=1200 so inputs are 300 bits.
        // Fragment: ceil(300/2) + 16 + 32 + 64 = 262. Participants {1,2,3}.
        // Per honest instance: disperse 2*262 + echo 3*2*262 + ready 3*2*80
        // = 2576; three instances 7728. Agreement: 4 instances, one round
        // each, 3 receivers * 2 votes * 96 = 2304. Shares: 3 included,
        // 3*16+64=112 bits, 3 receivers * 2 * 112 = 672.
        let cfg = config(4, 1, 1200, 1, 1);
        let art = run_honeybadger(&cfg).unwrap();
        assert_eq!(art.ledger.total(), 7728 + 2304 + 672);
        let s = stats(&art);
        assert_eq!(s.epochs.len(), 1);
        let e = &s.epochs[0];
        assert_eq!(e.included_instances, 3);
        assert_eq!(e.included_honest_inputs, 3);
        assert_eq!(e.ba_rounds, vec![1, 1, 1, 1]);
        // Honest agreements decide at 4d, the silent one at 5d, shares land
        // at 6d = 12.
        assert_eq!(e.completion_time, 12);
        let deliveries: Vec<_> = art
            .trace
            .markers()
            .iter()
            .filter(|m| m.kind == EventKind::Delivery)
            .collect();
        assert_eq!(deliveries.len(), 9);
        assert!(deliveries.iter().all(|m| m.time == 12));
        let broadcasts = art
            .trace
            .markers()
            .iter()
            .filter(|m| m.kind == EventKind::Broadcast)
            .count();
        assert_eq!(broadcasts, 3);
    }

    #[test]
    fn subset_always_covers_n_minus_f_and_all_honest_inputs() {
        for seed in 0..30 {
            let mut cfg = config(10, 3, 5000, 2, seed);
            cfg.proto.strategy = ByzStrategy::DelayMax;
            cfg.corruption = CorruptionStrategy::UniformRandom;
            let art = run_honeybadger(&cfg).unwrap();
            for e in &stats(&art).epochs {
                assert!(e.included_instances >= 7, "seed {seed}: {}", e.included_instances);
                assert_eq!(e.included_honest_inputs, 7, "seed {seed}");
            }
        }
    }

    #[test]
    fn stalled_instances_stretch_the_epoch_by_their_round_count() {
        let mut cfg = config(8, 2, 4000, 3, 11);
        cfg.proto.strategy = ByzStrategy::DelayMax;
        let art = run_honeybadger(&cfg).unwrap();
        let s = stats(&art);
        assert_eq!(s.epochs.len(), 3);
        let mut t0 = 0;
        for e in &s.epochs {
            let byz_worst = (0..2)
                .map(|i| e.ba_rounds[i])
                .max()
                .unwrap();
            for honest_inst in 2..8 {
                assert_eq!(e.ba_rounds[honest_inst], 1);
            }
            // close at t0+4d, worst agreement at +g rounds, shares +1.
            assert_eq!(e.completion_time, t0 + 2 * (5 + byz_worst as u64));
            t0 = e.completion_time;
        }
        assert_eq!(s.resubmissions, 0);
    }

    #[test]
    fn scaled_batches_grow_with_n_squared_log_n() {
        assert_eq!(epoch_batch_bits(2, 4, 16, true), 2 * 16 * 2 * 16);
        assert_eq!(epoch_batch_bits(2, 4, 16, false), 2);
        assert_eq!(epoch_batch_bits(1, 64, 8, true), 64 * 64 * 6 * 8);
    }

    #[test]
    fn epochs_replay_identically() {
        let mut cfg = config(8, 2, 4000, 2, 31);
        cfg.proto.strategy = ByzStrategy::DelayMax;
        cfg.trace_mode = tobsim_engine::TraceMode::Full;
        let a = run_honeybadger(&cfg).unwrap();
        let b = run_honeybadger(&cfg).unwrap();
        assert_eq!(a.trace.serialize(), b.trace.serialize());
    }
}
