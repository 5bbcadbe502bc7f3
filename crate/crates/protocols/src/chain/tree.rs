//! Append-only block tree shared by every chain-family run, plus the
//! per-node view machinery (known-set, best-tip rule, commit watermark).
//!
//! Blocks live in one arena indexed by `BlockId`; per-node state is just a
//! bitset over that arena plus a tip pointer, so a run with millions of
//! blocks never clones chains.

use std::collections::{BTreeSet, HashMap};

use tobsim_engine::{MsgId, NodeId};

pub type BlockId = u32;

/// Index of the genesis block in every tree.
pub const GENESIS: BlockId = 0;

#[derive(Debug, Clone)]
pub struct BlockMeta {
    pub parent: BlockId,
    pub producer: NodeId,
    pub honest: bool,
    pub height: u32,
    /// Transaction batch carried by this block; 0 means empty/junk payload.
    pub batch: MsgId,
    /// Round (or step) in which the block was produced.
    pub round: u64,
}

#[derive(Debug)]
pub struct BlockTree {
    blocks: Vec<BlockMeta>,
}

impl BlockTree {
    pub fn new() -> Self {
        BlockTree {
            blocks: vec![BlockMeta {
                parent: GENESIS,
                producer: 0,
                honest: true,
                height: 0,
                batch: 0,
                round: 0,
            }],
        }
    }

    pub fn add(
        &mut self,
        parent: BlockId,
        producer: NodeId,
        honest: bool,
        batch: MsgId,
        round: u64,
    ) -> BlockId {
        let height = self.blocks[parent as usize].height + 1;
        let id = self.blocks.len() as BlockId;
        self.blocks.push(BlockMeta {
            parent,
            producer,
            honest,
            height,
            batch,
            round,
        });
        id
    }

    pub fn meta(&self, id: BlockId) -> &BlockMeta {
        &self.blocks[id as usize]
    }

    pub fn height(&self, id: BlockId) -> u32 {
        self.blocks[id as usize].height
    }

    /// Number of blocks excluding genesis.
    pub fn len(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Chain from the first block above genesis down to `tip`, in height order.
    /// Genesis itself is excluded (it is shared by construction).
    pub fn path(&self, tip: BlockId) -> Vec<BlockId> {
        let mut out = Vec::with_capacity(self.height(tip) as usize);
        let mut cur = tip;
        while cur != GENESIS {
            out.push(cur);
            cur = self.blocks[cur as usize].parent;
        }
        out.reverse();
        out
    }

    /// Whether `tip` beats `incumbent` under the deterministic fork-choice
    /// rule: strictly greater height, or equal height and lower id.
    pub fn prefer(&self, tip: BlockId, incumbent: BlockId) -> bool {
        let (h_new, h_old) = (self.height(tip), self.height(incumbent));
        h_new > h_old || (h_new == h_old && tip < incumbent)
    }
}

/// Drop the last `k` blocks of a chain; what remains is the committed prefix.
pub fn committed_prefix(chain: &[BlockId], k: u32) -> &[BlockId] {
    let keep = chain.len().saturating_sub(k as usize);
    &chain[..keep]
}

/// Fraction of produced blocks (genesis excluded) that are not on the chain
/// ending at `main_tip`. Returns 0 for an empty tree.
pub fn orphan_ratio(tree: &BlockTree, main_tip: BlockId) -> f64 {
    let total = tree.len();
    if total == 0 {
        return 0.0;
    }
    let main = tree.height(main_tip) as usize;
    (total - main) as f64 / total as f64
}

/// One node's local view of the tree: which blocks it has seen, the tip it
/// currently extends, and how far down its chain it has committed.
#[derive(Debug)]
pub struct NodeView {
    known: Vec<bool>,
    pub tip: BlockId,
    /// Batches on the path from genesis to `tip` (for duplicate avoidance
    /// when choosing what to include in a new block).
    pub batches_on_main: BTreeSet<MsgId>,
    /// Highest height this node has committed so far.
    pub committed_upto: u32,
    /// Blocks received before their parent, keyed by the missing parent.
    pending: HashMap<BlockId, Vec<BlockId>>,
}

impl NodeView {
    pub fn new() -> Self {
        NodeView {
            known: vec![true], // genesis
            tip: GENESIS,
            batches_on_main: BTreeSet::new(),
            committed_upto: 0,
            pending: HashMap::new(),
        }
    }

    pub fn knows(&self, id: BlockId) -> bool {
        self.known.get(id as usize).copied().unwrap_or(false)
    }

    fn mark_known(&mut self, id: BlockId) {
        let idx = id as usize;
        if idx >= self.known.len() {
            self.known.resize(idx + 1, false);
        }
        self.known[idx] = true;
    }

    /// Incorporate `id` (buffering it if the parent is still unknown) and
    /// update the tip under the fork-choice rule. Returns true if the tip
    /// changed.
    pub fn learn(&mut self, tree: &BlockTree, id: BlockId) -> bool {
        if self.knows(id) {
            return false;
        }
        let mut changed = false;
        let mut stack = vec![id];
        while let Some(blk) = stack.pop() {
            if self.knows(blk) {
                continue;
            }
            let parent = tree.meta(blk).parent;
            if !self.knows(parent) {
                self.pending.entry(parent).or_default().push(blk);
                continue;
            }
            self.mark_known(blk);
            if tree.prefer(blk, self.tip) {
                self.switch_tip(tree, blk);
                changed = true;
            }
            if let Some(children) = self.pending.remove(&blk) {
                stack.extend(children);
            }
        }
        changed
    }

    fn switch_tip(&mut self, tree: &BlockTree, new_tip: BlockId) {
        // Walk both tips back to their common ancestor, adjusting the batch
        // set incrementally; reorgs are shallow in practice so this is cheap.
        let mut old = self.tip;
        let mut new = new_tip;
        let mut gained: Vec<MsgId> = Vec::new();
        while tree.height(new) > tree.height(old) {
            gained.push(tree.meta(new).batch);
            new = tree.meta(new).parent;
        }
        while tree.height(old) > tree.height(new) {
            self.batches_on_main.remove(&tree.meta(old).batch);
            old = tree.meta(old).parent;
        }
        while old != new {
            self.batches_on_main.remove(&tree.meta(old).batch);
            gained.push(tree.meta(new).batch);
            old = tree.meta(old).parent;
            new = tree.meta(new).parent;
        }
        for b in gained {
            if b != 0 {
                self.batches_on_main.insert(b);
            }
        }
        // 0 entries (empty payload) never join the set.
        self.batches_on_main.remove(&0);
        self.tip = new_tip;
    }

    /// Blocks newly buried at least `k` deep under the current tip, in height
    /// order, advancing the commit watermark past them.
    pub fn newly_committed(&mut self, tree: &BlockTree, k: u32) -> Vec<BlockId> {
        let commit_h = tree.height(self.tip).saturating_sub(k);
        if commit_h <= self.committed_upto {
            return Vec::new();
        }
        let mut cur = self.tip;
        while tree.height(cur) > commit_h {
            cur = tree.meta(cur).parent;
        }
        let mut out = Vec::new();
        while tree.height(cur) > self.committed_upto {
            out.push(cur);
            cur = tree.meta(cur).parent;
        }
        out.reverse();
        self.committed_upto = commit_h;
        out
    }
}
