//! Permissionless-suitability verdicts read off the fitted exponents.
//!
//! A protocol scales to open participation when adding nodes costs each
//! of them nothing: per-node communication stays flat (total grows at
//! most linearly in n) and commit latency does not grow with n at all.
//! Both thresholds are judged from measured slopes alone — the verdict
//! never consults the protocol's name.

use serde::{Deserialize, Serialize};

use crate::fit::ScalingFit;
use crate::spec::Axis;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermissionlessVerdict {
    pub protocol: String,
    pub comm_slope_n: f64,
    pub latency_slope_n: f64,
    pub suited: bool,
    pub tolerance: f64,
    pub reason: String,
}

/// Judge from two log-log fits along the node-count axis. `tolerance`
/// absorbs measurement noise on both thresholds (comm ≤ 1, latency ≤ 0).
pub fn classify(
    protocol: &str,
    comm_fit: &ScalingFit,
    latency_fit: &ScalingFit,
    tolerance: f64,
) -> PermissionlessVerdict {
    assert_eq!(comm_fit.axis, Axis::N, "suitability is a node-count question");
    assert_eq!(latency_fit.axis, Axis::N);
    let comm_ok = comm_fit.slope <= 1.0 + tolerance;
    let latency_ok = latency_fit.slope <= 0.0 + tolerance;
    let reason = match (comm_ok, latency_ok) {
        (true, true) => format!(
            "total traffic ~ n^{:.2} and latency ~ n^{:.2}: per-node cost flat",
            comm_fit.slope, latency_fit.slope
        ),
        (false, true) => format!(
            "total traffic ~ n^{:.2} exceeds linear: per-node load grows with the network",
            comm_fit.slope
        ),
        (true, false) => format!(
            "latency ~ n^{:.2} grows with the network",
            latency_fit.slope
        ),
        (false, false) => format!(
            "traffic ~ n^{:.2} and latency ~ n^{:.2} both grow with the network",
            comm_fit.slope, latency_fit.slope
        ),
    };
    PermissionlessVerdict {
        protocol: protocol.to_string(),
        comm_slope_n: comm_fit.slope,
        latency_slope_n: latency_fit.slope,
        suited: comm_ok && latency_ok,
        tolerance,
        reason,
    }
}
