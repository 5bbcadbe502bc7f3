use serde::Deserialize;
use tobsim_engine::TraceMode;
use tobsim_net::{ModelConfig, NetError};

use crate::common::{ByzStrategy, ProtoParams, ProtocolKind, RunConfig};
use crate::RunError;

/// The `[protocol]` section: which model to run and its specific knobs.
/// Everything except `name` is optional and defaulted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub name: String,
    /// Chain commit depth; defaults to `kappa`.
    pub k: Option<u32>,
    pub asleep_fraction: Option<tobsim_net::FracValue>,
    pub timeout_factor: Option<u64>,
    /// `"fixed"` (payload is `b` bits) or `"scaled"` (epoch payload is
    /// `b * n^2 * ceil(log2 n) * kappa` bits, committee protocol only).
    pub batch_policy: Option<String>,
    pub steps_r: Option<u32>,
    pub committee_gap: Option<tobsim_net::FracValue>,
    pub epsilon: Option<tobsim_net::FracValue>,
    pub spectre_rate: Option<tobsim_net::FracValue>,
    pub byz_strategy: Option<String>,
}

/// The `[run]` section: how long to run and what to retain.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunControlConfig {
    /// Run length in the protocol's natural unit (rounds, heights, epochs).
    pub rounds: Option<u64>,
    pub record_snapshots: Option<bool>,
    /// `"markers"` (default) or `"full"`.
    pub trace: Option<String>,
    pub event_cap: Option<u64>,
}

/// Assemble a resolved `RunConfig` from parsed config sections.
pub fn resolve(
    model: &ModelConfig,
    protocol: &ProtocolConfig,
    control: &RunControlConfig,
) -> Result<RunConfig, RunError> {
    let params = model.params()?;
    let kind = ProtocolKind::parse(&protocol.name)
        .ok_or_else(|| RunError::BadConfig(format!("unknown protocol {:?}", protocol.name)))?;
    let mut proto = ProtoParams::defaults(kind, &params);
    if let Some(k) = protocol.k {
        proto.confirmations = k;
    }
    if let Some(v) = &protocol.asleep_fraction {
        proto.asleep = v.to_frac()?;
    }
    if let Some(tf) = protocol.timeout_factor {
        proto.timeout_factor = tf;
    }
    if let Some(policy) = &protocol.batch_policy {
        proto.batch_scaled = match policy.as_str() {
            "fixed" => false,
            "scaled" => true,
            other => {
                return Err(RunError::BadConfig(format!(
                    "batch_policy must be \"fixed\" or \"scaled\", got {other:?}"
                )))
            }
        };
    }
    if let Some(r) = protocol.steps_r {
        proto.steps_r = r;
    }
    if let Some(v) = &protocol.committee_gap {
        proto.committee_gap = v.to_frac()?;
    }
    if let Some(v) = &protocol.epsilon {
        let eps = v.to_frac()?;
        if eps == tobsim_net::frac(0, 1) {
            return Err(RunError::Net(NetError::BadParam(
                "epsilon must be positive".into(),
            )));
        }
        proto.epsilon = eps;
    }
    if let Some(v) = &protocol.spectre_rate {
        proto.spectre_rate = Some(v.to_frac()?);
    }
    if let Some(name) = &protocol.byz_strategy {
        proto.strategy = ByzStrategy::parse(name)
            .ok_or_else(|| RunError::BadConfig(format!("unknown byz_strategy {name:?}")))?;
    }

    let trace_mode = match control.trace.as_deref() {
        None | Some("markers") => TraceMode::Markers,
        Some("full") => TraceMode::Full,
        Some(other) => {
            return Err(RunError::BadConfig(format!(
                "trace must be \"markers\" or \"full\", got {other:?}"
            )))
        }
    };

    let config = RunConfig {
        protocol: kind,
        params,
        mode: model.mode(),
        policy: model.policy(),
        corruption: model.strategy(),
        seed: model.seed,
        proto,
        rounds: control.rounds.unwrap_or(100),
        record_snapshots: control.record_snapshots.unwrap_or(false),
        trace_mode,
        event_cap: control.event_cap,
    };
    config.validate()?;
    Ok(config)
}
