//! Backbone properties of chain runs: common prefix, chain growth, chain
//! quality, and the liveness bound they imply.

use tobsim_protocols::{ChainSnapshot, ChainStats};

#[derive(Debug, Clone, Copy)]
pub struct BackboneReport {
    /// Deepest observed prefix divergence: the smallest k such that
    /// truncating k blocks restored the prefix relation in every sampled
    /// pair of honest views.
    pub kp: u64,
    /// Worst-case growth rate: blocks per round, minimized over nodes and
    /// windows of `growth_window` rounds.
    pub tau: f64,
    /// Worst honest fraction over any `quality_window` consecutive blocks
    /// of the final main chain.
    pub mu: f64,
    /// Rounds until a fresh payload is committed by everyone:
    /// `max(growth_window, (quality_window + kp) / tau)`. `None` when the
    /// observed growth was zero.
    pub u: Option<f64>,
}

/// Longest common prefix length of two chains.
fn lcp(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

/// Deepest divergence over all ordered snapshot pairs with
/// `round(a) <= round(b)`: the common-prefix property says the earlier
/// chain minus k blocks must prefix the later one, so the requirement on k
/// is `len(a) - lcp(a, b)`.
pub fn common_prefix_depth(snapshots: &[ChainSnapshot]) -> u64 {
    let mut worst = 0usize;
    for a in snapshots {
        for b in snapshots {
            if a.round > b.round || (a.round == b.round && a.node == b.node) {
                continue;
            }
            let overlap = lcp(&a.chain, &b.chain);
            worst = worst.max(a.chain.len() - overlap);
        }
    }
    worst as u64
}

/// Minimum per-round growth over every honest node and window start.
pub fn growth_rate(stats: &ChainStats, window: usize) -> f64 {
    let rounds = stats.length_by_round.len();
    if window == 0 || rounds <= window {
        return 0.0;
    }
    let mut tau = f64::INFINITY;
    for i in 0..stats.honest_ids.len() {
        for start in 0..rounds - window {
            let grown =
                stats.length_by_round[start + window][i] - stats.length_by_round[start][i];
            tau = tau.min(grown as f64 / window as f64);
        }
    }
    if tau.is_finite() {
        tau
    } else {
        0.0
    }
}

/// Minimum honest-producer fraction over every `window` consecutive blocks
/// of the final main chain. A chain shorter than the window is judged as a
/// single window; an empty chain scores zero.
pub fn chain_quality(stats: &ChainStats, window: usize) -> f64 {
    let flags = &stats.final_main_flags;
    if flags.is_empty() || window == 0 {
        return 0.0;
    }
    let w = window.min(flags.len());
    let mut honest_in: usize = flags[..w].iter().filter(|&&h| h).count();
    let mut mu = honest_in as f64 / w as f64;
    for start in 1..=flags.len() - w {
        honest_in -= flags[start - 1] as usize;
        honest_in += flags[start + w - 1] as usize;
        mu = mu.min(honest_in as f64 / w as f64);
    }
    mu
}

/// Assemble the report; `growth_window` and `quality_window` are the spans
/// (in rounds and blocks) at which growth and quality were certified.
pub fn backbone(stats: &ChainStats, growth_window: usize, quality_window: usize) -> BackboneReport {
    let kp = common_prefix_depth(&stats.snapshots);
    let tau = growth_rate(stats, growth_window);
    let mu = chain_quality(stats, quality_window);
    let u = if tau > 0.0 {
        Some((growth_window as f64).max((quality_window as u64 + kp) as f64 / tau))
    } else {
        None
    };
    BackboneReport { kp, tau, mu, u }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(round: u64, node: u32, chain: &[u64]) -> ChainSnapshot {
        ChainSnapshot {
            round,
            node,
            chain: chain.to_vec(),
        }
    }

    /// Brute-force oracle: the smallest k that makes every ordered pair
    /// prefix-compatible after truncating k blocks, found by trying k
    /// upward.
    fn kp_oracle(snaps: &[ChainSnapshot]) -> u64 {
        'k: for k in 0u64.. {
            for a in snaps {
                for b in snaps {
                    if a.round > b.round || (a.round == b.round && a.node == b.node) {
                        continue;
                    }
                    let keep = a.chain.len().saturating_sub(k as usize);
                    let trunc = &a.chain[..keep];
                    if !b.chain.starts_with(trunc) {
                        continue 'k;
                    }
                }
            }
            return k;
        }
        unreachable!()
    }

    #[test]
    fn divergence_depth_matches_truncation_oracle() {
        let cases: Vec<Vec<ChainSnapshot>> = vec![
            // Perfect agreement.
            vec![snap(1, 0, &[1, 2, 3]), snap(1, 1, &[1, 2, 3])],
            // One node one block ahead: depth 1 for the longer view.
            vec![snap(1, 0, &[1, 2, 3, 4]), snap(1, 1, &[1, 2, 3])],
            // Fork two deep at the same round.
            vec![snap(2, 0, &[1, 2, 5, 6]), snap(2, 1, &[1, 2, 7, 8])],
            // Later snapshot extends the earlier one: no divergence.
            vec![snap(1, 0, &[1, 2]), snap(3, 0, &[1, 2, 3, 4])],
            // Reorg across rounds: early view loses its tail.
            vec![snap(1, 0, &[1, 9]), snap(2, 1, &[1, 2, 3])],
            vec![],
        ];
        for snaps in cases {
            assert_eq!(
                common_prefix_depth(&snaps),
                kp_oracle(&snaps),
                "snaps {snaps:?}"
            );
        }
    }

    fn chain_stats(lengths: Vec<Vec<u32>>, flags: Vec<bool>) -> ChainStats {
        ChainStats {
            honest_ids: (0..lengths.first().map_or(0, Vec::len) as u32).collect(),
            length_by_round: lengths,
            final_main_flags: flags,
            ..ChainStats::default()
        }
    }

    #[test]
    fn growth_is_the_worst_window() {
        // Node 0 grows 1/round, node 1 stalls for rounds 2..4.
        let s = chain_stats(
            vec![
                vec![0, 0],
                vec![1, 1],
                vec![2, 1],
                vec![3, 1],
                vec![4, 4],
                vec![5, 5],
            ],
            vec![],
        );
        // Window 2: node 1 grows 0 over rounds [1,3].
        assert_eq!(growth_rate(&s, 2), 0.0);
        // Window 4: worst is node 1 over [0,4] = 4/4 ... over [1,5] = 4/4,
        // node 0 always 1.0.
        assert_eq!(growth_rate(&s, 4), 1.0);
        // Degenerate windows.
        assert_eq!(growth_rate(&s, 0), 0.0);
        assert_eq!(growth_rate(&s, 99), 0.0);
    }

    #[test]
    fn quality_is_the_worst_honest_fraction() {
        let s = chain_stats(
            vec![],
            vec![true, true, false, false, true, true, true, false],
        );
        // Window 2 catches the two adversary blocks in a row.
        assert_eq!(chain_quality(&s, 2), 0.0);
        assert_eq!(chain_quality(&s, 4), 0.5);
        let all = chain_quality(&s, 8);
        assert!((all - 5.0 / 8.0).abs() < 1e-12);
        // Window longer than the chain degrades to the whole chain.
        assert!((chain_quality(&s, 100) - 5.0 / 8.0).abs() < 1e-12);
        assert_eq!(chain_quality(&chain_stats(vec![], vec![]), 4), 0.0);
    }

    #[test]
    fn liveness_bound_combines_the_three_properties() {
        let mut s = chain_stats(
            vec![vec![0], vec![1], vec![2], vec![3], vec![4]],
            vec![true; 10],
        );
        s.snapshots = vec![snap(1, 0, &[1, 2, 3]), snap(1, 1, &[1, 2])];
        let r = backbone(&s, 2, 4);
        assert_eq!(r.kp, 1);
        assert_eq!(r.tau, 1.0);
        assert_eq!(r.mu, 1.0);
        // u = max(2, (4 + 1) / 1.0) = 5.
        assert_eq!(r.u, Some(5.0));
        // Zero growth: no liveness bound at all.
        let stalled = chain_stats(vec![vec![0], vec![0], vec![0]], vec![true; 3]);
        assert_eq!(backbone(&stalled, 1, 4).u, None);
    }
}
