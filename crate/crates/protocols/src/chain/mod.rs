//! Longest-chain protocols: a shared block tree and lockstep runner with
//! pluggable leader election (proof-of-work lottery, slot leader beacon,
//! per-step awake lottery).

mod run;
mod tree;

pub use run::run_chain;
pub use tree::{committed_prefix, orphan_ratio, BlockId, BlockMeta, BlockTree, NodeView, GENESIS};
