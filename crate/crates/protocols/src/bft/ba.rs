//! Round-level abstraction of binary agreement with a common coin.
//!
//! When every honest node holds the same input the first round's auxiliary
//! votes are unanimous and agreement decides immediately. When the inputs
//! are mixed, the adversary controls which votes arrive first and can keep
//! honest nodes split until the common coin happens to match the standing
//! majority — an independent fair coin per round, so the round count is
//! geometric with mean two. The runner draws that count (and the decided
//! value, which the adversary also steers) from a dedicated stream.

use tobsim_engine::RngStream;

/// Rounds and decision for an instance whose honest inputs all agree.
pub fn ba_unanimous(value: bool) -> (u32, bool) {
    (1, value)
}

/// Rounds and decision for an adversarially mixed instance: the round
/// count is Geometric(1/2) on 1, 2, ... and the decided bit is the coin
/// the adversary finally lets through.
pub fn ba_forced(rng: &mut RngStream) -> (u32, bool) {
    let rounds = rng.geometric_half();
    let value = rng.bernoulli_ratio(1, 2);
    (rounds, value)
}

/// Bits one receiver takes in from one voting round: every other
/// participant broadcasts one auxiliary vote.
pub fn ba_round_bits(peers: u32, vote_bits: u64) -> u64 {
    peers as u64 * vote_bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_instances_decide_in_one_round() {
        assert_eq!(ba_unanimous(true), (1, true));
        assert_eq!(ba_unanimous(false), (1, false));
    }

    #[test]
    fn forced_instances_take_two_rounds_on_average() {
        let mut rng = RngStream::root(404);
        let draws: Vec<u32> = (0..10_000).map(|_| ba_forced(&mut rng).0).collect();
        let mean = draws.iter().map(|&r| r as f64).sum::<f64>() / draws.len() as f64;
        assert!((mean - 2.0).abs() < 0.06, "mean rounds {mean}");
        assert!(draws.iter().all(|&r| r >= 1));
        // The tail actually occurs: P[rounds >= 5] = 1/16.
        assert!(draws.iter().filter(|&&r| r >= 5).count() > 400);
    }

    #[test]
    fn forced_decisions_are_fair() {
        let mut rng = RngStream::root(77);
        let ones = (0..10_000).filter(|_| ba_forced(&mut rng).1).count();
        assert!((4700..=5300).contains(&ones), "{ones} ones");
    }

    #[test]
    fn round_bits_scale_with_participants() {
        assert_eq!(ba_round_bits(3, 96), 288);
        assert_eq!(ba_round_bits(0, 96), 0);
    }
}
