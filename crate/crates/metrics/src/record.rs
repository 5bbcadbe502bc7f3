//! One flat record per run, assembled from all measurement layers.

use serde::{Deserialize, Serialize};

use tobsim_protocols::{ProtoStats, RunArtifacts, RunConfig};

use crate::backbone::{backbone, BackboneReport};
use crate::comm::amortized;
use crate::latency::{measure_latency, LatencySummary};
use crate::order::{check_order, OrderReport};

/// Flat, serializable measurement row for sweeps and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub protocol: String,
    pub seed: u64,
    pub n: u32,
    pub delivered_batches: u64,
    pub latency_mean: Option<f64>,
    pub latency_max: Option<u64>,
    pub comm_amortized: Option<f64>,
    pub liveness_failures: u64,
    /// Chain runs only.
    pub kp: Option<u64>,
    pub tau: Option<f64>,
    pub mu: Option<f64>,
    pub u: Option<f64>,
    pub orphan_ratio: Option<f64>,
    pub end_time: u64,
}

/// Everything measured about one run.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub record: MetricsRecord,
    pub latency: LatencySummary,
    pub order: OrderReport,
    pub backbone: Option<BackboneReport>,
}

/// Measure one run. Backbone properties are computed only for chain runs
/// (they need per-round chain state), with the commit depth as both the
/// growth and quality window.
pub fn evaluate(cfg: &RunConfig, art: &RunArtifacts) -> Evaluation {
    let latency = measure_latency(&art.trace, art.horizon, art.end_time);
    let comm = amortized(art.ledger.total(), &latency);
    let conflicted: &[u64] = match &art.stats {
        ProtoStats::Spectre(s) => &s.conflicted,
        _ => &[],
    };
    let order = check_order(&art.trace, art.horizon, art.end_time, conflicted);
    let (bb, orphan) = match &art.stats {
        ProtoStats::Chain(s) => {
            let k = cfg.proto.confirmations as usize;
            (Some(backbone(s, k.max(1), k.max(1))), Some(s.orphan_ratio))
        }
        _ => (None, None),
    };
    let record = MetricsRecord {
        protocol: cfg.protocol.name().to_string(),
        seed: cfg.seed,
        n: cfg.params.n,
        delivered_batches: latency.complete.len() as u64,
        latency_mean: latency.mean(),
        latency_max: latency.max(),
        comm_amortized: comm,
        liveness_failures: latency.liveness_failures,
        kp: bb.map(|b| b.kp),
        tau: bb.map(|b| b.tau),
        mu: bb.map(|b| b.mu),
        u: bb.and_then(|b| b.u),
        orphan_ratio: orphan,
        end_time: art.end_time,
    };
    Evaluation {
        record,
        latency,
        order,
        backbone: bb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_roundtrip_through_json() {
        let r = MetricsRecord {
            protocol: "tendermint".into(),
            seed: 7,
            n: 16,
            delivered_batches: 42,
            latency_mean: Some(3.0),
            latency_max: Some(7),
            comm_amortized: Some(1.25),
            liveness_failures: 0,
            kp: None,
            tau: None,
            mu: None,
            u: None,
            orphan_ratio: None,
            end_time: 999,
        };
        let text = serde_json::to_string(&r).unwrap();
        let back: MetricsRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.protocol, "tendermint");
        assert_eq!(back.latency_mean, Some(3.0));
        assert_eq!(back.kp, None);
        assert_eq!(back.end_time, 999);
    }
}
