use serde::Deserialize;

use crate::params::{frac_from_f64, parse_frac};
use crate::{CorruptionStrategy, DelayPolicy, Frac, ModelParams, NetError, SynchronyMode};

/// A fraction as written in a config file: `"1/5"`, `"0.2"`, `0.2`, or `3`.
/// String forms are exact; a bare float is rounded to the nearest 1e-9.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FracValue {
    Text(String),
    Float(f64),
    Int(u64),
}

impl FracValue {
    pub fn to_frac(&self) -> Result<Frac, NetError> {
        match self {
            FracValue::Text(s) => parse_frac(s),
            FracValue::Float(x) => frac_from_f64(*x),
            FracValue::Int(v) => Ok(Frac::from_integer(*v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynchronyChoice {
    #[default]
    Sync,
    Partial,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionChoice {
    #[default]
    Uniform,
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    #[default]
    Max,
    Min,
    Random,
}

fn default_p() -> FracValue {
    FracValue::Int(1)
}

/// The `[model]` section of a run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: u32,
    pub delta: u64,
    pub alpha: FracValue,
    pub kappa: u32,
    /// Protocol rate/hardness knob; protocols that ignore it may omit it.
    #[serde(default = "default_p")]
    pub p: FracValue,
    pub b: u64,
    #[serde(default)]
    pub synchrony: SynchronyChoice,
    /// Global stabilization time, used only under `synchrony = "partial"`.
    #[serde(default)]
    pub gst: u64,
    #[serde(default)]
    pub corruption: CorruptionChoice,
    #[serde(default)]
    pub delay_policy: PolicyChoice,
    pub seed: u64,
}

impl ModelConfig {
    /// Resolve and validate the numeric parameters.
    pub fn params(&self) -> Result<ModelParams, NetError> {
        let params = ModelParams {
            n: self.n,
            delta: self.delta,
            alpha: self.alpha.to_frac()?,
            kappa: self.kappa,
            p: self.p.to_frac()?,
            b: self.b,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn mode(&self) -> SynchronyMode {
        match self.synchrony {
            SynchronyChoice::Sync => SynchronyMode::Synchronous,
            SynchronyChoice::Partial => SynchronyMode::PartiallySynchronous { gst: self.gst },
            SynchronyChoice::Async => SynchronyMode::AsynchronousRounds,
        }
    }

    pub fn policy(&self) -> DelayPolicy {
        match self.delay_policy {
            PolicyChoice::Max => DelayPolicy::Max,
            PolicyChoice::Min => DelayPolicy::Min,
            PolicyChoice::Random => DelayPolicy::Random,
        }
    }

    pub fn strategy(&self) -> CorruptionStrategy {
        match self.corruption {
            CorruptionChoice::Uniform => CorruptionStrategy::UniformRandom,
            CorruptionChoice::Worst => CorruptionStrategy::WorstCase,
        }
    }
}
