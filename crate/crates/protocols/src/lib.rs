//! Protocol models, each reduced to what drives latency and communication:
//! who produces, who votes, what gets sent, and when payloads count as
//! delivered by the totally ordered log.
//!
//! Three families are covered. Longest-chain protocols (`chain`) share one
//! lockstep runner parameterized by the leader-election rule. Classical BFT
//! (`bft`) covers a rotating-leader three-phase design and an asynchronous
//! committee built from reliable broadcast + binary agreement. The
//! remaining designs (`algorand`, `spectre`) get dedicated runners for
//! committee sortition and DAG confirmation.
//!
//! Every runner produces [`RunArtifacts`]: the event trace with
//! broadcast/delivery markers, the honest received-bit ledger, and
//! protocol-specific observations that the metrics layer turns into
//! latency, communication, and backbone measurements.

pub mod algorand;
pub mod bft;
pub mod chain;
mod common;
mod config;
mod runner;
pub mod spectre;

pub use common::{
    AlgorandStats, BatchQueue, ByzStrategy, ChainSnapshot, ChainStats, EpochStats, HeightCommit,
    HoneyBadgerStats, ProtoParams, ProtoStats, ProtocolKind, RunArtifacts, RunConfig,
    SortitionRound, SpectreStats, TendermintStats, TxConfirm,
};
pub use config::{resolve, ProtocolConfig, RunControlConfig};
pub use runner::run;

use thiserror::Error;

/// Errors from assembling or executing a protocol run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] tobsim_engine::SimError),

    #[error(transparent)]
    Net(#[from] tobsim_net::NetError),

    #[error("bad run configuration: {0}")]
    BadConfig(String),
}
