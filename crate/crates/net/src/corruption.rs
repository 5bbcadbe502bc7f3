use std::collections::BTreeSet;

use tobsim_engine::{NodeId, RngStream};

use crate::{ModelParams, NetError};

/// How the adversary picks which `floor(alpha * n)` nodes to control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionStrategy {
    /// Uniformly random subset, drawn from the run's corruption stream.
    UniformRandom,
    /// Worst-case placement: the lowest ids, which puts byzantine nodes
    /// first in every rotation schedule (leaders, proposers).
    WorstCase,
}

/// The fixed (static adversary) assignment of nodes to the adversary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionMap {
    n: u32,
    byzantine: BTreeSet<NodeId>,
}

impl CorruptionMap {
    /// Sample an assignment for `params` under `strategy`.
    pub fn sample(
        params: &ModelParams,
        strategy: CorruptionStrategy,
        rng: &mut RngStream,
    ) -> Result<CorruptionMap, NetError> {
        params.validate()?;
        let count = params.byz_count();
        let byzantine: BTreeSet<NodeId> = match strategy {
            CorruptionStrategy::WorstCase => (0..count).collect(),
            CorruptionStrategy::UniformRandom => rng
                .sample_distinct(params.n as u64, count as u64)
                .into_iter()
                .map(|x| x as NodeId)
                .collect(),
        };
        Ok(CorruptionMap {
            n: params.n,
            byzantine,
        })
    }

    /// All-honest assignment.
    pub fn none(n: u32) -> CorruptionMap {
        CorruptionMap {
            n,
            byzantine: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn is_byzantine(&self, node: NodeId) -> bool {
        self.byzantine.contains(&node)
    }

    pub fn is_honest(&self, node: NodeId) -> bool {
        !self.is_byzantine(node)
    }

    pub fn byzantine(&self) -> &BTreeSet<NodeId> {
        &self.byzantine
    }

    pub fn byz_count(&self) -> u32 {
        self.byzantine.len() as u32
    }

    pub fn honest_count(&self) -> u32 {
        self.n - self.byz_count()
    }

    pub fn honest_iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).filter(|id| self.is_honest(*id))
    }
}
