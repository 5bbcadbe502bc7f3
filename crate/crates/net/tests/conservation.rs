//! Bit-conservation oracle: the ledger's totals must equal what an
//! independent replay of the full trace counts. The replay walks raw trace
//! lines and sums delivery sizes at honest nodes — it shares no code with
//! the ledger's credit path, so a disagreement pinpoints double-counted or
//! dropped bits.

use std::collections::BTreeMap;

use tobsim_engine::{Engine, EventKind, NodeId, RngStream, Stop, Trace, TraceMode};
use tobsim_net::{
    frac, CorruptionMap, CorruptionStrategy, DelayPolicy, ModelParams, Network, SynchronyMode,
};

/// Replay oracle: per-node honest received bits, straight from trace lines.
fn replay_honest_bits(trace: &Trace) -> (u64, BTreeMap<NodeId, u64>) {
    let mut per_node = BTreeMap::new();
    let mut total = 0;
    for rec in trace.records() {
        if rec.kind == EventKind::MessageDelivery && trace.is_honest(rec.node) {
            *per_node.entry(rec.node).or_insert(0) += rec.size_bits;
            total += rec.size_bits;
        }
    }
    (total, per_node)
}

/// Drive a randomized traffic pattern: every delivery may trigger further
/// sends, mixing unicasts and broadcasts of varying sizes.
fn run_traffic(seed: u64, n: u32, alpha_num: u64, policy: DelayPolicy, mode: SynchronyMode) -> (Trace, u64, BTreeMap<NodeId, u64>) {
    let params = ModelParams {
        n,
        delta: 5,
        alpha: frac(alpha_num, 4),
        kappa: 16,
        p: frac(1, 2),
        b: 256,
    };
    let mut rng = RngStream::root(seed);
    let corruption =
        CorruptionMap::sample(&params, CorruptionStrategy::UniformRandom, &mut rng).unwrap();
    let mut eng: Engine<u32> = Engine::new(
        format!("conservation-{seed}"),
        n,
        corruption.byzantine().iter().copied().collect(),
        TraceMode::Full,
    );
    let mut net: Network<u32> =
        Network::new(params.delta, mode, policy, corruption, rng.fork("net").unwrap(), true);
    let mut traffic = rng.fork("traffic").unwrap();

    // Seed messages: each node fires one initial unicast with a chain depth.
    for node in 0..n {
        let id = net.fresh_id();
        let receiver = (node + 1) % n;
        net.send(&mut eng, node, receiver, 0, 64 + node as u64, id, 4)
            .unwrap();
    }
    eng.run(Stop::Quiescent, |eng, ev| {
        net.delivered(&ev);
        if ev.payload > 0 {
            let round = (4 - ev.payload) + 1;
            if traffic.bernoulli_ratio(1, 3) {
                let id = net.fresh_id();
                net.broadcast(eng, ev.node, round, 32 * ev.payload as u64, id, |_| ev.payload - 1)?;
            } else {
                let id = net.fresh_id();
                let receiver = traffic.below(n as u64) as NodeId;
                if receiver != ev.node {
                    net.send(eng, ev.node, receiver, round, 128, id, ev.payload - 1)?;
                }
            }
        }
        Ok(())
    })
    .unwrap();

    let total = net.ledger().total();
    let per_node = net.ledger().per_node().clone();
    (eng.into_trace(), total, per_node)
}

#[test]
fn ledger_matches_trace_replay_exactly() {
    for seed in 0..30 {
        for (policy, mode) in [
            (DelayPolicy::Max, SynchronyMode::Synchronous),
            (DelayPolicy::Min, SynchronyMode::Synchronous),
            (DelayPolicy::Random, SynchronyMode::Synchronous),
            (DelayPolicy::Random, SynchronyMode::PartiallySynchronous { gst: 20 }),
            (DelayPolicy::Random, SynchronyMode::AsynchronousRounds),
        ] {
            let (trace, ledger_total, ledger_per_node) = run_traffic(seed, 8, 1, policy, mode);
            let (replay_total, replay_per_node) = replay_honest_bits(&trace);
            assert_eq!(
                ledger_total, replay_total,
                "total mismatch seed={seed} policy={policy:?} mode={mode:?}"
            );
            let ledger_nonzero: BTreeMap<NodeId, u64> = ledger_per_node
                .into_iter()
                .filter(|&(_, bits)| bits > 0)
                .collect();
            assert_eq!(ledger_nonzero, replay_per_node, "per-node mismatch seed={seed}");
        }
    }
}

#[test]
fn byzantine_receivers_never_enter_the_ledger() {
    for seed in 100..120 {
        let (trace, _, per_node) = run_traffic(seed, 8, 1, DelayPolicy::Random, SynchronyMode::Synchronous);
        for (node, bits) in per_node {
            if bits > 0 {
                assert!(trace.is_honest(node), "byzantine node {node} was credited");
            }
        }
    }
}

#[test]
fn synchronous_deliveries_respect_the_bound() {
    // Every delivery in a synchronous full trace fires within delta of some
    // earlier instant; verified directly: gaps between a chained send and
    // its delivery never exceed delta = 5 (sends happen at delivery times
    // of their causes, so consecutive delivery times differ by at most 5).
    let (trace, _, _) = run_traffic(7, 6, 0, DelayPolicy::Random, SynchronyMode::Synchronous);
    let mut last = 0u64;
    for rec in trace.records() {
        assert!(rec.time <= last + 5, "gap beyond delta at seq {}", rec.seq);
        last = rec.time;
    }
}
