//! Single entry point: route a resolved run configuration to the runner
//! for its protocol family.

use crate::algorand::run_algorand;
use crate::bft::{run_honeybadger, run_tendermint};
use crate::chain::run_chain;
use crate::common::{ProtocolKind, RunArtifacts, RunConfig};
use crate::spectre::run_spectre;
use crate::RunError;

/// Execute one simulation run and collect its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    match cfg.protocol {
        ProtocolKind::Nakamoto | ProtocolKind::Ouroboros | ProtocolKind::SnowWhite => {
            run_chain(cfg)
        }
        ProtocolKind::Tendermint => run_tendermint(cfg),
        ProtocolKind::HoneyBadger => run_honeybadger(cfg),
        ProtocolKind::Algorand => run_algorand(cfg),
        ProtocolKind::Spectre => run_spectre(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tobsim_net::{frac, ModelParams};

    #[test]
    fn dispatch_reaches_every_family() {
        // Tiny fault-free runs: each family must produce deliveries.
        for kind in [
            ProtocolKind::Ouroboros,
            ProtocolKind::Tendermint,
            ProtocolKind::HoneyBadger,
            ProtocolKind::Algorand,
            ProtocolKind::Spectre,
        ] {
            let params = ModelParams {
                n: 4,
                delta: 2,
                alpha: frac(0, 4),
                kappa: 8,
                p: frac(1, 4),
                b: 256,
            };
            let mut cfg = RunConfig::new(kind, params, 1);
            cfg.rounds = 6;
            cfg.proto.confirmations = 2; // shallow commits so short chains deliver
            let art = run(&cfg).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            let deliveries = art
                .trace
                .markers()
                .iter()
                .filter(|m| m.kind == tobsim_engine::EventKind::Delivery)
                .count();
            assert!(deliveries > 0, "{kind:?} produced no deliveries");
        }
    }
}
