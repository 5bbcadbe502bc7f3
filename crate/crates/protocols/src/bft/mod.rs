//! Quorum-based BFT protocols: rotating-leader three-phase consensus and
//! the asynchronous committee pipeline (reliable broadcast + binary
//! agreement + common subset).

mod acs;
mod ba;
mod rbc;
mod tendermint;

pub use acs::run_honeybadger;
pub use ba::ba_round_bits;
pub use rbc::{rbc_bits, RbcCost};
pub use tendermint::run_tendermint;
