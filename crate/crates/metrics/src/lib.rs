//! Measurements over run artifacts.
//!
//! Latency of a batch is the span from its client broadcast to its delivery
//! at the **last** honest node; only batches delivered by every honest node
//! count, and batches broadcast too close to the end of the run are set
//! aside rather than blamed (`horizon` says how much time a batch
//! legitimately needs). Communication is the honest received-bit total
//! amortized over the payload bits that were actually delivered everywhere.
//!
//! Chain runs additionally expose the backbone properties — common-prefix
//! depth, growth rate, chain quality — and the liveness bound implied by
//! them. Every run can be checked against the ordered-broadcast contract
//! (validity, agreement, integrity, total order); a declared conflicting
//! pair relaxes the verdict to a partial order instead of failing it.

pub mod backbone;
pub mod comm;
pub mod latency;
pub mod order;
mod record;
#[cfg(test)]
mod testutil;

pub use backbone::{backbone, BackboneReport};
pub use comm::amortized;
pub use latency::{measure_latency, BatchLatency, LatencySummary};
pub use order::{check_order, OrderReport, Verdict};
pub use record::{evaluate, Evaluation, MetricsRecord};
