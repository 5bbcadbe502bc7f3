//! Cost model for erasure-coded reliable broadcast.
//!
//! A sender splits its `payload` into `n - 2f` data fragments, so any
//! `n - 2f` of the `n` coded fragments reconstruct it. Each fragment
//! travels with a commitment root, a membership branch of `ceil(log2 n)`
//! hashes and a header; echo and ready waves then follow the usual
//! three-round pattern (disperse, echo to all, ready to all, deliver on
//! `2f + 1` readies). The runner aggregates each wave into one delivery
//! event per receiver; these numbers are what those events carry.

/// Bits of the two message shapes a broadcast instance sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbcCost {
    /// One coded fragment with its commitment branch and header.
    pub fragment_bits: u64,
    /// One ready message: commitment root plus header.
    pub ready_bits: u64,
}

pub(crate) fn ceil_log2(n: u32) -> u32 {
    debug_assert!(n >= 1);
    32 - (n - 1).leading_zeros()
}

/// Per-message sizes for an instance tolerating `f_tol` faults among `n`.
pub fn rbc_bits(n: u32, f_tol: u32, kappa: u32, payload_bits: u64) -> RbcCost {
    let width = (n - 2 * f_tol) as u64;
    assert!(width >= 1, "erasure width requires n > 2f");
    let data = payload_bits.div_ceil(width);
    let branch = kappa as u64 * ceil_log2(n) as u64;
    RbcCost {
        fragment_bits: data + kappa as u64 + branch + 64,
        ready_bits: kappa as u64 + 64,
    }
}
