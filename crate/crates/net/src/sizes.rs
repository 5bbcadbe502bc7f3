/// Bit sizes of stubbed cryptographic objects.
///
/// Runs never materialize real hashes or signatures; only sizes matter for
/// communication accounting, and every size is governed by the security
/// parameter so that measured complexity responds to `kappa` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeModel {
    pub kappa: u32,
}

impl SizeModel {
    /// Fixed per-block header overhead (height, timestamps, nonce).
    pub const HEADER_BITS: u64 = 64;

    pub fn new(kappa: u32) -> SizeModel {
        SizeModel { kappa }
    }

    /// A hash value: `kappa` bits.
    pub fn hash(&self) -> u64 {
        self.kappa as u64
    }

    /// A signature: `kappa` bits.
    pub fn signature(&self) -> u64 {
        self.kappa as u64
    }

    /// A verifiable-random-function evaluation with its proof: `2 kappa`.
    pub fn vrf_proof(&self) -> u64 {
        2 * self.kappa as u64
    }

    /// One share of a threshold scheme (signature or decryption): `kappa`.
    pub fn threshold_share(&self) -> u64 {
        self.kappa as u64
    }

    /// A vote referencing a block: hash + signature + header.
    pub fn vote(&self) -> u64 {
        self.hash() + self.signature() + Self::HEADER_BITS
    }

    /// A chain block carrying `payload` bits: payload + parent hash +
    /// producer signature + header.
    pub fn chain_block(&self, payload: u64) -> u64 {
        payload + self.hash() + self.signature() + Self::HEADER_BITS
    }
}
