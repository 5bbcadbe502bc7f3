//! Deterministic discrete-event simulation core.
//!
//! Everything a protocol run needs that is not protocol-specific lives here:
//! a virtual clock ticking in abstract steps, a priority queue of scheduled
//! events with a total pop order, hierarchical seeded RNG streams so that
//! logically distinct random choices never share a generator, and an
//! append-only trace of everything that happened, suitable for replay checks
//! and byte-identical reproducibility tests.

mod engine;
mod event;
mod rng;
mod time;
mod trace;

pub use engine::{Engine, Stop};
pub use event::{Event, EventHandle, EventKind, MsgId, NodeId};
pub use rng::RngStream;
pub use time::VirtualTime;
pub use trace::{Trace, TraceMode, TraceRecord};

use thiserror::Error;

/// Errors surfaced by the simulation core.
#[derive(Debug, Error)]
pub enum SimError {
    /// Attempt to schedule an event strictly before the current clock.
    #[error("cannot schedule at t={at} when the clock is already at t={now}")]
    SchedulePast { at: u64, now: u64 },

    /// The run processed more events than its configured cap. The trace
    /// accumulated so far is left intact on the engine for post-mortems.
    #[error("runaway simulation: processed {processed} events (cap {cap})")]
    Runaway { processed: u64, cap: u64 },

    /// Two `fork` calls on the same stream reused a label; the streams would
    /// be byte-identical, which is never what a simulation wants.
    #[error("duplicate RNG stream label {label:?} under path {path:?}")]
    DuplicateStreamLabel { path: String, label: String },

    /// A handler aborted the run with a protocol-level problem.
    #[error("simulation handler failed: {0}")]
    Handler(String),

    /// A trace file could not be parsed back.
    #[error("malformed trace line {line}: {reason}")]
    TraceParse { line: usize, reason: String },
}
