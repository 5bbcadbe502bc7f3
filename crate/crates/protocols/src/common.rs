use std::collections::BTreeSet;
use std::fmt;

use sha2::{Digest, Sha256};
use tobsim_engine::{Engine, EventKind, MsgId, NodeId, TraceMode, Trace};
use tobsim_net::{
    frac, BitLedger, CorruptionMap, CorruptionStrategy, DelayPolicy, Frac, ModelParams,
    SynchronyMode,
};

use crate::RunError;

/// The seven protocol models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Proof-of-work longest chain: every node mines each round.
    Nakamoto,
    /// Slot-leader longest chain: one pseudorandom leader per round.
    Ouroboros,
    /// Per-step leader lottery with a rotating sleep schedule.
    SnowWhite,
    /// Rotating-leader three-phase BFT with quorum votes.
    Tendermint,
    /// Asynchronous committee: reliable broadcast + binary agreement per
    /// node input, batched per epoch.
    HoneyBadger,
    /// Committee sortition: private proposer/committee lotteries, fixed
    /// step count per round.
    Algorand,
    /// Block DAG referencing all known tips; confirmation by counting
    /// honest blocks above.
    Spectre,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 7] = [
        ProtocolKind::Nakamoto,
        ProtocolKind::Ouroboros,
        ProtocolKind::SnowWhite,
        ProtocolKind::Tendermint,
        ProtocolKind::HoneyBadger,
        ProtocolKind::Algorand,
        ProtocolKind::Spectre,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Nakamoto => "nakamoto",
            ProtocolKind::Ouroboros => "ouroboros",
            ProtocolKind::SnowWhite => "snowwhite",
            ProtocolKind::Tendermint => "tendermint",
            ProtocolKind::HoneyBadger => "honeybadger",
            ProtocolKind::Algorand => "algorand",
            ProtocolKind::Spectre => "spectre",
        }
    }

    pub fn parse(name: &str) -> Option<ProtocolKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Adversary power the protocol's guarantees require to be strictly
    /// exceeded by honesty: chain and DAG families tolerate up to 1/2,
    /// quorum-based families up to 1/3.
    pub fn admissibility(self) -> Frac {
        match self {
            ProtocolKind::Nakamoto
            | ProtocolKind::Ouroboros
            | ProtocolKind::SnowWhite
            | ProtocolKind::Spectre => frac(1, 2),
            ProtocolKind::Tendermint | ProtocolKind::HoneyBadger | ProtocolKind::Algorand => {
                frac(1, 3)
            }
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the adversary's nodes do with their protocol role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByzStrategy {
    /// Send nothing at all.
    Silent,
    /// Send conflicting values to different halves of the network.
    Equivocate,
    /// Behave correctly but stretch every own message (and, where the
    /// protocol is scheduled adversarially, stall instances) to the bound.
    DelayMax,
    /// Longest-chain withholding: extend a private fork, release when the
    /// public chain threatens to catch up.
    PrivateFork,
    /// Produce structurally valid blocks carrying worthless payloads.
    Junk,
    /// Behave exactly like an honest node.
    Mimic,
}

impl ByzStrategy {
    pub fn name(self) -> &'static str {
        match self {
            ByzStrategy::Silent => "silent",
            ByzStrategy::Equivocate => "equivocate",
            ByzStrategy::DelayMax => "delay-max",
            ByzStrategy::PrivateFork => "private-fork",
            ByzStrategy::Junk => "junk",
            ByzStrategy::Mimic => "mimic",
        }
    }

    pub fn parse(name: &str) -> Option<ByzStrategy> {
        [
            ByzStrategy::Silent,
            ByzStrategy::Equivocate,
            ByzStrategy::DelayMax,
            ByzStrategy::PrivateFork,
            ByzStrategy::Junk,
            ByzStrategy::Mimic,
        ]
        .into_iter()
        .find(|s| s.name() == name)
    }
}

/// Protocol-specific knobs, all defaulted so configs name only what they
/// change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtoParams {
    /// Chain commit depth `k`; defaults to `kappa`.
    pub confirmations: u32,
    /// Fraction of total weight asleep each round (per-step lottery model).
    pub asleep: Frac,
    /// Failed-round length in `delta` units (rotating-leader BFT).
    pub timeout_factor: u64,
    /// When true, the committee protocol's epoch batch is `b * n^2 *
    /// ceil(log2 n) * kappa` total bits instead of the flat `b`.
    pub batch_scaled: bool,
    /// Fixed voting step count per sortition round.
    pub steps_r: u32,
    /// Margin between the committee-honesty threshold and `alpha`.
    pub committee_gap: Frac,
    /// Acceptance risk for DAG confirmation.
    pub epsilon: Frac,
    /// DAG per-node per-step block rate; defaults to `p`.
    pub spectre_rate: Option<Frac>,
    pub strategy: ByzStrategy,
}

impl ProtoParams {
    pub fn defaults(protocol: ProtocolKind, params: &ModelParams) -> ProtoParams {
        ProtoParams {
            confirmations: params.kappa,
            asleep: frac(0, 1),
            timeout_factor: 4,
            batch_scaled: false,
            steps_r: 9,
            committee_gap: frac(1, 3),
            epsilon: frac(1, 1 << 20),
            spectre_rate: None,
            strategy: match protocol {
                ProtocolKind::Nakamoto | ProtocolKind::Ouroboros | ProtocolKind::SnowWhite => {
                    ByzStrategy::PrivateFork
                }
                ProtocolKind::Spectre => ByzStrategy::Junk,
                _ => ByzStrategy::Silent,
            },
        }
    }
}

/// A fully resolved run: everything a runner needs, nothing optional left.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    pub params: ModelParams,
    pub mode: SynchronyMode,
    pub policy: DelayPolicy,
    pub corruption: CorruptionStrategy,
    pub seed: u64,
    pub proto: ProtoParams,
    /// Run length in the protocol's natural unit: rounds for chains and
    /// sortition, heights for rotating-leader BFT, epochs for the
    /// committee protocol, steps/delta rounds for the DAG.
    pub rounds: u64,
    /// Record full per-node chain snapshots for prefix checking (costly;
    /// off for large sweeps — lengths are always recorded).
    pub record_snapshots: bool,
    pub trace_mode: TraceMode,
    pub event_cap: Option<u64>,
}

impl RunConfig {
    pub fn new(protocol: ProtocolKind, params: ModelParams, seed: u64) -> RunConfig {
        let proto = ProtoParams::defaults(protocol, &params);
        RunConfig {
            protocol,
            params,
            mode: SynchronyMode::Synchronous,
            policy: DelayPolicy::Max,
            corruption: CorruptionStrategy::UniformRandom,
            seed,
            proto,
            rounds: 100,
            record_snapshots: false,
            trace_mode: TraceMode::Markers,
            event_cap: None,
        }
    }

    /// Canonical one-line rendering, the digest input. Every field that
    /// influences the run appears here, so equal digests mean replayable
    /// equality.
    pub fn canonical(&self) -> String {
        let mode = match self.mode {
            SynchronyMode::Synchronous => "sync".to_string(),
            SynchronyMode::PartiallySynchronous { gst } => format!("partial:{gst}"),
            SynchronyMode::AsynchronousRounds => "async".to_string(),
        };
        let policy = match self.policy {
            DelayPolicy::Max => "max",
            DelayPolicy::Min => "min",
            DelayPolicy::Random => "random",
        };
        let corruption = match self.corruption {
            CorruptionStrategy::UniformRandom => "uniform",
            CorruptionStrategy::WorstCase => "worst",
        };
        format!(
            "proto={};n={};delta={};alpha={};kappa={};p={};b={};mode={};policy={};corruption={};seed={};k={};asleep={};tf={};scaled={};R={};gap={};eps={};rate={};strategy={};rounds={};snaps={}",
            self.protocol,
            self.params.n,
            self.params.delta,
            self.params.alpha,
            self.params.kappa,
            self.params.p,
            self.params.b,
            mode,
            policy,
            corruption,
            self.seed,
            self.proto.confirmations,
            self.proto.asleep,
            self.proto.timeout_factor,
            self.proto.batch_scaled,
            self.proto.steps_r,
            self.proto.committee_gap,
            self.proto.epsilon,
            self.proto
                .spectre_rate
                .map_or("p".to_string(), |r| r.to_string()),
            self.proto.strategy.name(),
            self.rounds,
            self.record_snapshots,
        )
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Validate fields and the admissibility threshold.
    pub fn validate(&self) -> Result<(), RunError> {
        self.params.validate()?;
        self.params.check_admissible(self.protocol.admissibility())?;
        if self.rounds == 0 {
            return Err(RunError::BadConfig("run length must be positive".into()));
        }
        if self.proto.timeout_factor < 4 {
            return Err(RunError::BadConfig(
                "timeout factor below 4 cannot fit the two vote phases plus slack".into(),
            ));
        }
        if self.protocol == ProtocolKind::SnowWhite {
            // Awake honest weight must strictly exceed adversary weight:
            // 1 - alpha - asleep > alpha.
            let one = Frac::from_integer(1);
            if self.proto.asleep + self.params.alpha >= one
                || one - self.params.alpha - self.proto.asleep <= self.params.alpha
            {
                return Err(RunError::BadConfig(format!(
                    "awake honest weight {} does not exceed adversary weight {}",
                    one - self.params.alpha - self.proto.asleep,
                    self.params.alpha
                )));
            }
        }
        if self.protocol == ProtocolKind::HoneyBadger && self.policy != DelayPolicy::Max {
            return Err(RunError::BadConfig(
                "the committee protocol is measured under adversarial scheduling; only the max delay policy is meaningful".into(),
            ));
        }
        Ok(())
    }
}

/// Client-side payload source shared by the runners.
///
/// A batch is minted when a producer needs one, which marks the broadcast
/// instant (measurement start). Batches are attributed to the lowest
/// honest node — the client's entry point — unless a specific honest
/// producer is named.
pub struct BatchQueue {
    batches: Vec<MsgId>,
    payload_bits: u64,
    client_node: NodeId,
}

impl BatchQueue {
    pub fn new(payload_bits: u64, corruption: &CorruptionMap) -> BatchQueue {
        let client_node = corruption.honest_iter().next().unwrap_or(0);
        BatchQueue {
            batches: Vec::new(),
            payload_bits,
            client_node,
        }
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload_bits
    }

    /// Mint a fresh batch, marking its broadcast now.
    pub fn mint<P>(&mut self, eng: &mut Engine<P>, id: MsgId, producer: Option<NodeId>) -> MsgId {
        let node = producer.unwrap_or(self.client_node);
        eng.mark(EventKind::Broadcast, node, self.payload_bits, id);
        self.batches.push(id);
        id
    }

    /// Oldest batch not yet in `on_chain`; `None` when everything minted so
    /// far is already placed (the producer should mint fresh).
    pub fn oldest_outside(&self, on_chain: &BTreeSet<MsgId>) -> Option<MsgId> {
        self.batches.iter().copied().find(|b| !on_chain.contains(b))
    }

    pub fn minted(&self) -> &[MsgId] {
        &self.batches
    }
}

/// Per-round per-node chain lengths plus optional full snapshots.
#[derive(Debug, Clone, Default)]
pub struct ChainStats {
    /// Honest node ids, fixing the column order of `length_by_round`.
    pub honest_ids: Vec<NodeId>,
    /// `length_by_round[r][i]` = chain length of `honest_ids[i]` after
    /// round `r` (block count from genesis, genesis excluded).
    pub length_by_round: Vec<Vec<u32>>,
    /// Full per-node chains at sampled rounds (block ids from genesis).
    pub snapshots: Vec<ChainSnapshot>,
    /// Producer-honesty flags along the final main chain, genesis excluded.
    pub final_main_flags: Vec<bool>,
    /// All produced blocks (genesis excluded), including withheld ones.
    pub blocks_total: u64,
    pub main_chain_len: u64,
    pub orphan_ratio: f64,
    /// Produced blocks per round, network-wide.
    pub block_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ChainSnapshot {
    pub round: u64,
    pub node: NodeId,
    pub chain: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct HeightCommit {
    pub height: u64,
    pub rounds_used: u32,
    pub commit_time: u64,
    pub batch: MsgId,
}

#[derive(Debug, Clone, Default)]
pub struct TendermintStats {
    pub commits: Vec<HeightCommit>,
    /// Two honest nodes committed different blocks at one height.
    pub safety_violation: bool,
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: u64,
    /// Instances whose agreement decided inclusion.
    pub included_instances: u32,
    /// Included instances whose input came from an honest node.
    pub included_honest_inputs: u32,
    /// Agreement round counts, one per instance.
    pub ba_rounds: Vec<u32>,
    pub completion_time: u64,
}

#[derive(Debug, Clone, Default)]
pub struct HoneyBadgerStats {
    pub epochs: Vec<EpochStats>,
    /// Honest inputs excluded in some epoch and re-submitted later.
    pub resubmissions: u64,
}

#[derive(Debug, Clone)]
pub struct SortitionRound {
    pub round: u64,
    pub proposers: u32,
    /// Committee size per voting step.
    pub committee_sizes: Vec<u32>,
    /// Worst adversary share seen in any step committee this round.
    pub committee_byz_max: f64,
    pub finalized: bool,
}

#[derive(Debug, Clone, Default)]
pub struct AlgorandStats {
    pub rounds: Vec<SortitionRound>,
    pub committee_target: u32,
    pub empty_rounds: u64,
}

#[derive(Debug, Clone)]
pub struct TxConfirm {
    pub batch: MsgId,
    pub broadcast_time: u64,
    /// Confirmation instant at the last honest node.
    pub final_time: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SpectreStats {
    pub blocks_total: u64,
    pub honest_blocks: u64,
    pub junk_bits: u64,
    pub confirmed: Vec<TxConfirm>,
    /// Batch ids withheld from confirmation because of a configured
    /// conflict; never delivered by design.
    pub conflicted: Vec<MsgId>,
}

/// Protocol-specific observations beyond the trace.
#[derive(Debug, Clone)]
pub enum ProtoStats {
    Chain(ChainStats),
    Tendermint(TendermintStats),
    HoneyBadger(HoneyBadgerStats),
    Algorand(AlgorandStats),
    Spectre(SpectreStats),
}

impl ProtoStats {
    pub fn as_chain(&self) -> Option<&ChainStats> {
        match self {
            ProtoStats::Chain(c) => Some(c),
            _ => None,
        }
    }
}

/// Everything a completed run hands to measurement.
pub struct RunArtifacts {
    pub trace: Trace,
    pub ledger: BitLedger,
    pub corruption: CorruptionMap,
    pub stats: ProtoStats,
    /// Expected worst-case broadcast-to-delivery span in steps, for
    /// tail-exempting liveness checks on finite traces.
    pub horizon: u64,
    /// Clock value when the run stopped.
    pub end_time: u64,
}
