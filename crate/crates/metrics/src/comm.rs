//! Amortized communication: honest received bits per delivered payload bit.

use crate::latency::LatencySummary;

/// `ledger_total` is every bit an honest node received over the run; the
/// denominator is the payload mass that actually completed delivery. The
/// ratio is the protocol's overhead factor per useful bit. `None` when
/// nothing completed — an overhead over zero payload is meaningless, not
/// infinite.
pub fn amortized(ledger_total: u64, latency: &LatencySummary) -> Option<f64> {
    let delivered = latency.delivered_payload_bits();
    if delivered == 0 {
        return None;
    }
    Some(ledger_total as f64 / delivered as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::measure_latency;
    use crate::testutil::trace_of;
    use tobsim_engine::EventKind;

    #[test]
    fn ratio_counts_only_completed_payload() {
        let trace = trace_of(
            2,
            &[],
            &[
                (1, EventKind::Broadcast, 0, 1000, 1),
                (2, EventKind::Delivery, 0, 1000, 1),
                (2, EventKind::Delivery, 1, 1000, 1),
                // Second batch never completes: not in the denominator.
                (3, EventKind::Broadcast, 0, 500, 2),
                (4, EventKind::Delivery, 0, 500, 2),
            ],
        );
        let s = measure_latency(&trace, 1, 100);
        assert_eq!(amortized(3500, &s), Some(3.5));
    }

    #[test]
    fn no_delivery_means_no_ratio() {
        let trace = trace_of(2, &[], &[(1, EventKind::Broadcast, 0, 64, 1)]);
        let s = measure_latency(&trace, 1, 100);
        assert_eq!(amortized(10_000, &s), None);
    }
}
