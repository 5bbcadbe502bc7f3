use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::SimError;

/// A deterministic random stream identified by `(seed, path)`.
///
/// Streams form a tree: the root is created from the run's seed, and every
/// logically distinct consumer (a node, a protocol instance, the network's
/// delay sampler) forks its own child off its parent with a label. The
/// child's generator is keyed by `Sha256(seed_le || path)`, so it depends
/// only on the path — never on how much of the parent was consumed — which
/// keeps every random choice reproducible even when code paths reorder.
///
/// Forking the same label twice from one stream is an error: the two
/// children would emit identical bytes, silently correlating choices that
/// were meant to be independent.
#[derive(Debug)]
pub struct RngStream {
    seed: u64,
    path: String,
    rng: ChaCha12Rng,
    children: BTreeSet<String>,
}

impl RngStream {
    /// Root stream for a run.
    pub fn root(seed: u64) -> RngStream {
        Self::at_path(seed, String::new())
    }

    fn at_path(seed: u64, path: String) -> RngStream {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update([0x1f]);
        h.update(path.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        RngStream {
            seed,
            path,
            rng: ChaCha12Rng::from_seed(key),
            children: BTreeSet::new(),
        }
    }

    /// The `/`-joined label path identifying this stream.
    pub fn path(&self) -> &str {
        &self.path
    }

    /// Derive the child stream for `label`.
    pub fn fork(&mut self, label: &str) -> Result<RngStream, SimError> {
        if !self.children.insert(label.to_string()) {
            return Err(SimError::DuplicateStreamLabel {
                path: self.path.clone(),
                label: label.to_string(),
            });
        }
        let child_path = if self.path.is_empty() {
            label.to_string()
        } else {
            format!("{}/{}", self.path, label)
        };
        Ok(Self::at_path(self.seed, child_path))
    }

    /// Exact Bernoulli draw with rational probability `num/denom`.
    ///
    /// Sampling an integer below `denom` and comparing against `num` avoids
    /// float rounding entirely, so configured rational rates are honored bit
    /// for bit.
    pub fn bernoulli_ratio(&mut self, num: u64, denom: u64) -> bool {
        assert!(denom > 0, "bernoulli denominator must be positive");
        if num >= denom {
            return true;
        }
        self.rng.random_range(0..denom) < num
    }

    /// Bernoulli draw with float probability (for irrational rates such as
    /// sortition's `1 - 2^(-kappa/n)`).
    pub fn bernoulli_f64(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.rng.random::<f64>() < p
    }

    /// Uniform draw in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform bound must be positive");
        self.rng.random_range(0..bound)
    }

    /// Uniform draw in `lo..=hi`.
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        self.rng.random_range(lo..=hi)
    }

    /// Number of fair-coin rounds until the first success, support `1..`.
    /// Mean 2: models per-round termination probability 1/2.
    pub fn geometric_half(&mut self) -> u32 {
        let mut rounds = 1;
        while !self.rng.random::<bool>() {
            rounds += 1;
        }
        rounds
    }

    /// Sample `k` distinct items from `0..n` (partial Fisher-Yates), sorted.
    pub fn sample_distinct(&mut self, n: u64, k: u64) -> Vec<u64> {
        assert!(k <= n, "cannot sample {k} distinct values from 0..{n}");
        let mut pool: Vec<u64> = (0..n).collect();
        for i in 0..k as usize {
            let j = i + self.rng.random_range(0..(n as usize - i));
            pool.swap(i, j);
        }
        let mut picked: Vec<u64> = pool[..k as usize].to_vec();
        picked.sort_unstable();
        picked
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
