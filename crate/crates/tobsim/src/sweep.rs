//! Sweep execution: every (grid point, seed) pair is an independent job —
//! build the config, run the protocol, evaluate the trace, keep a compact
//! row. Jobs run in parallel; the table is sorted by coordinates
//! afterwards so aggregation never depends on scheduling.

use std::sync::Once;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tobsim_metrics::{evaluate, MetricsRecord, OrderReport, Verdict};
use tobsim_net::{frac_from_f64, parse_frac, ModelParams};
use tobsim_protocols::{run, ByzStrategy, ProtoStats, RunConfig};

use crate::spec::{Axis, ExperimentSpec};

/// Cap the worker pool from the `TOBSIM_WORKERS` environment variable.
/// Called once lazily before the first sweep; later calls are no-ops, as
/// is the whole thing when the variable is absent or unparsable.
pub fn ensure_workers() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(count) = std::env::var("TOBSIM_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&c| c > 0)
        {
            // Building the global pool can only fail if something else
            // already built it, in which case that configuration wins.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build_global();
        }
    });
}

/// One-line rendering of each ordering property, serializable unlike the
/// full report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub validity: String,
    pub agreement: String,
    pub integrity: String,
    pub total_order: String,
    pub all_ok: bool,
}

fn label(v: &Verdict) -> String {
    match v {
        Verdict::Satisfied => "ok".to_string(),
        Verdict::Weakened(why) => format!("weakened: {why}"),
        Verdict::Violated(why) => format!("violated: {why}"),
    }
}

impl OrderSummary {
    pub fn from_report(r: &OrderReport) -> OrderSummary {
        OrderSummary {
            validity: label(&r.validity),
            agreement: label(&r.agreement),
            integrity: label(&r.integrity),
            total_order: label(&r.total_order),
            all_ok: r.all_ok(),
        }
    }
}

/// Protocol-specific scalars the acceptance checks need beyond the shared
/// metrics record. Fields are zero/empty when the family does not produce
/// them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extras {
    pub delta: u64,
    pub byz_count: u32,
    /// Rounds the first committed height took (rotating-leader family).
    pub first_height_rounds: Option<u32>,
    /// Agreement round counts of adversary-proposed instances, every
    /// epoch (committee pipeline).
    pub byz_instance_rounds: Vec<u32>,
    /// Smallest per-epoch common-subset size (committee pipeline).
    pub min_epoch_included: Option<u32>,
    /// Voting-step committees sampled (sortition family).
    pub committee_steps: u64,
    /// Rounds whose worst step committee reached the honesty threshold.
    pub committee_exceed_rounds: u64,
    pub committee_mean: f64,
    pub proposer_mean: f64,
    /// Structurally valid but worthless bits the adversary injected (DAG).
    pub junk_bits: u64,
}

fn extras(cfg: &RunConfig, stats: &ProtoStats, byz_count: u32) -> Extras {
    let mut x = Extras {
        delta: cfg.params.delta,
        byz_count,
        ..Extras::default()
    };
    match stats {
        ProtoStats::Tendermint(s) => {
            x.first_height_rounds = s.commits.first().map(|c| c.rounds_used);
        }
        ProtoStats::HoneyBadger(s) => {
            // Instances are indexed by proposer, so the adversary's are
            // exactly the first-or-sampled byzantine ids; the runner keeps
            // the corruption map, but the row only needs the counts, and
            // the proposer order makes them recoverable from the record.
            x.min_epoch_included = s.epochs.iter().map(|e| e.included_instances).min();
            x.byz_instance_rounds = Vec::new(); // filled by the caller with the map in hand
        }
        ProtoStats::Algorand(s) => {
            let mut steps = 0u64;
            let mut exceed = 0u64;
            let mut members = 0u64;
            let mut proposers = 0u64;
            let threshold = tobsim_net::frac_to_f64(cfg.params.alpha)
                + tobsim_net::frac_to_f64(cfg.proto.committee_gap);
            for r in &s.rounds {
                steps += r.committee_sizes.len() as u64;
                members += r.committee_sizes.iter().map(|&c| c as u64).sum::<u64>();
                proposers += r.proposers as u64;
                if r.committee_byz_max >= threshold {
                    exceed += 1;
                }
            }
            x.committee_steps = steps;
            x.committee_exceed_rounds = exceed;
            x.committee_mean = if steps == 0 { 0.0 } else { members as f64 / steps as f64 };
            x.proposer_mean = if s.rounds.is_empty() {
                0.0
            } else {
                proposers as f64 / s.rounds.len() as f64
            };
        }
        ProtoStats::Spectre(s) => x.junk_bits = s.junk_bits,
        ProtoStats::Chain(_) => {}
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowData {
    pub record: MetricsRecord,
    pub order: OrderSummary,
    pub extras: Extras,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum RowOutcome {
    Done(RowData),
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub value: f64,
    pub value_str: String,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: RowOutcome,
}

impl SweepRow {
    pub fn data(&self) -> Option<&RowData> {
        match &self.outcome {
            RowOutcome::Done(d) => Some(d),
            RowOutcome::Skipped { .. } => None,
        }
    }
}

/// The base run's model parameters in config notation, kept with the
/// table so saved results can still be judged against asymptotic claims
/// (term dominance needs concrete parameter magnitudes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub n: u32,
    pub delta: u64,
    pub alpha: String,
    pub kappa: u32,
    pub p: String,
    pub b: u64,
}

impl BaseParams {
    fn of(params: &ModelParams) -> BaseParams {
        BaseParams {
            n: params.n,
            delta: params.delta,
            alpha: params.alpha.to_string(),
            kappa: params.kappa,
            p: params.p.to_string(),
            b: params.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub protocol: String,
    pub axis: Axis,
    pub base: BaseParams,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Concrete parameters at the sweep's midpoint: the base run with the
    /// swept axis moved to the geometric mean of its grid. This is where
    /// dominance between claim terms is decided.
    pub fn mid_params(&self) -> Option<ModelParams> {
        let alpha = parse_frac(&self.base.alpha).ok()?;
        let p = parse_frac(&self.base.p).ok()?;
        let mut mid = ModelParams {
            n: self.base.n,
            delta: self.base.delta,
            alpha,
            kappa: self.base.kappa,
            p,
            b: self.base.b,
        };
        let mut values: Vec<f64> = Vec::new();
        for row in &self.rows {
            if values.len() <= row.point {
                values.resize(row.point + 1, row.value);
            }
            values[row.point] = row.value;
        }
        if values.is_empty() || values.iter().any(|v| *v <= 0.0) {
            return if self.axis == Axis::Alpha { Some(mid) } else { None };
        }
        let geo = (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp();
        match self.axis {
            Axis::N => mid.n = geo.round() as u32,
            Axis::Kappa => mid.kappa = geo.round() as u32,
            Axis::Delta => mid.delta = geo.round() as u64,
            Axis::B => mid.b = geo.round() as u64,
            Axis::P => mid.p = frac_from_f64(geo).ok()?,
            Axis::Alpha => mid.alpha = frac_from_f64(geo).ok()?,
            Axis::Epsilon => {}
        }
        Some(mid)
    }

    /// Per-point samples of one metric, point order, skipped rows and
    /// absent metrics dropped.
    pub fn samples(&self, metric: impl Fn(&RowData) -> Option<f64>) -> Vec<(f64, Vec<f64>)> {
        let mut points: Vec<(usize, f64, Vec<f64>)> = Vec::new();
        for row in &self.rows {
            let Some(data) = row.data() else { continue };
            let Some(y) = metric(data) else { continue };
            match points.iter_mut().find(|(p, _, _)| *p == row.point) {
                Some((_, _, ys)) => ys.push(y),
                None => points.push((row.point, row.value, vec![y])),
            }
        }
        points.sort_by_key(|(p, _, _)| *p);
        points.into_iter().map(|(_, v, ys)| (v, ys)).collect()
    }

    pub fn done_rows(&self) -> impl Iterator<Item = &RowData> {
        self.rows.iter().filter_map(|r| r.data())
    }
}

fn run_row(cfg: &RunConfig) -> RowOutcome {
    match run(cfg) {
        Ok(art) => {
            let eval = evaluate(cfg, &art);
            let mut x = extras(cfg, &art.stats, art.corruption.byz_count());
            if let ProtoStats::HoneyBadger(s) = &art.stats {
                // Forced agreement rounds live on the adversary's own
                // instances; pull them out while the corruption map is
                // still in scope.
                if cfg.proto.strategy == ByzStrategy::DelayMax {
                    for e in &s.epochs {
                        for (node, &rounds) in e.ba_rounds.iter().enumerate() {
                            if !art.corruption.is_honest(node as u32) {
                                x.byz_instance_rounds.push(rounds);
                            }
                        }
                    }
                }
            }
            RowOutcome::Done(RowData {
                record: eval.record,
                order: OrderSummary::from_report(&eval.order),
                extras: x,
            })
        }
        Err(err) => RowOutcome::Skipped {
            reason: err.to_string(),
        },
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> SweepResult {
    ensure_workers();
    let jobs: Vec<(usize, u32)> = (0..spec.values.len())
        .flat_map(|p| (0..spec.seeds).map(move |s| (p, s)))
        .collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(point, seed_idx)| {
            let value = spec.values[point];
            let seed = spec.row_seed(point, seed_idx);
            let outcome = match spec.apply(value) {
                Ok(mut cfg) => {
                    cfg.seed = seed;
                    run_row(&cfg)
                }
                Err(reason) => RowOutcome::Skipped { reason },
            };
            SweepRow {
                point,
                value: ExperimentSpec::value_f64(value),
                value_str: value.to_string(),
                seed,
                outcome,
            }
        })
        .collect();
    rows.sort_by(|a, b| (a.point, a.seed).cmp(&(b.point, b.seed)));
    SweepResult {
        name: spec.name.clone(),
        protocol: spec.base.protocol.to_string(),
        axis: spec.axis,
        base: BaseParams::of(&spec.base.params),
        rows,
    }
}
