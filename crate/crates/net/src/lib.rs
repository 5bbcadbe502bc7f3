//! Network and adversary model shared by every protocol.
//!
//! This crate owns the knobs that define a run's environment — node count,
//! delay bound, adversary power, security parameter — plus the machinery
//! those knobs drive: corruption maps, the message-delay policies for each
//! synchrony assumption, bit-exact size stubs for cryptographic objects,
//! and the ledger of bits received by honest nodes that communication
//! metrics are computed from.

mod config;
mod corruption;
mod ledger;
mod network;
mod params;
mod sizes;

pub use config::{CorruptionChoice, FracValue, ModelConfig, PolicyChoice, SynchronyChoice};
pub use corruption::{CorruptionMap, CorruptionStrategy};
pub use ledger::BitLedger;
pub use network::{DelayPolicy, Network, SynchronyMode};
pub use params::{frac, frac_from_f64, frac_to_f64, parse_frac, Frac, ModelParams};
pub use sizes::SizeModel;

use thiserror::Error;

/// Errors raised while validating or applying the environment model.
#[derive(Debug, Error)]
pub enum NetError {
    /// A parameter is outside its meaningful range.
    #[error("bad parameter: {0}")]
    BadParam(String),

    /// The configured adversary power meets or exceeds what the protocol
    /// tolerates; such a run would measure nothing meaningful.
    #[error("adversary power {alpha} is not strictly below the admissibility threshold {threshold}")]
    Inadmissible { alpha: Frac, threshold: Frac },

    /// A fraction could not be parsed from its textual form.
    #[error("cannot parse {0:?} as a fraction (expected \"a/b\", a decimal, or an integer)")]
    BadFrac(String),

    /// A configuration file was structurally invalid.
    #[error("config error: {0}")]
    Config(String),
}
