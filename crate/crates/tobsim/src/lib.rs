//! Experiment layer over the protocol simulators: parameter sweeps, least-
//! squares scaling fits, the registered complexity-claim table, and the
//! permissionless-suitability classifier.
//!
//! The flow is sweep → fit → judge. A sweep runs one protocol over a grid
//! of values on a single axis (node count, security parameter, rate, ...),
//! many seeds per point, each run fully independent and evaluated into a
//! compact metrics row. Fits regress the per-point means on a log-log or
//! semi-log scale. Judging compares fitted slopes against the registered
//! asymptotic claims and derives a suited/not-suited verdict for open
//! participation from the node-count slopes alone.

pub mod claims;
pub mod classify;
pub mod emit;
pub mod fit;
pub mod report;
pub mod spec;
pub mod sweep;

pub use claims::{registry, validate_claim, Bound, ClaimEval, ClaimReport, ClaimVerdict, ComplexityClaim, Metric};
pub use classify::{classify, PermissionlessVerdict};
pub use emit::{emit_csv, emit_json, emit_plotdata, parse_json};
pub use fit::{fit_scaling, linear_fit, FitPoint, LinFit, Scale, ScalingFit};
pub use spec::{Axis, ExperimentSpec};
pub use sweep::{ensure_workers, run_sweep, Extras, OrderSummary, RowData, RowOutcome, SweepResult, SweepRow};
