//! Command-line front end: single runs, parameter sweeps, trace and
//! config checking, scaling-law reports, and the registered claim table.
//!
//! Configuration is TOML with `[model]`, `[protocol]` and `[run]`
//! sections; sweeps add an `[experiment]` section naming the axis, its
//! grid and the seed count. Results serialize to JSON (lossless), CSV,
//! or plot-ready columns.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use tobsim::{
    classify, emit_csv, emit_json, emit_plotdata, fit_scaling, parse_json, registry,
    validate_claim, Axis, ClaimEval, ClaimReport, ExperimentSpec, Metric, OrderSummary, Scale,
    ScalingFit, SweepResult,
};
use tobsim_engine::Trace;
use tobsim_metrics::{check_order, evaluate};
use tobsim_net::{FracValue, ModelConfig};
use tobsim_protocols::{resolve, run, ProtocolConfig, RunConfig, RunControlConfig};

#[derive(Parser)]
#[command(
    name = "tobsim",
    version,
    about = "Deterministic round-based simulator for ordered-broadcast protocols"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one configured run and print its measurements as JSON.
    Run {
        /// TOML file with [model], [protocol] and optional [run] sections.
        config: PathBuf,
        /// Also write the full event trace here (forces full tracing).
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run the sweep described by the config's [experiment] section.
    Sweep {
        config: PathBuf,
        /// Output format: json, csv, or plotdata.
        #[arg(long, default_value = "json")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the ordered-broadcast contract: accepts a serialized trace
    /// or a run config (which is executed first).
    Check {
        path: PathBuf,
        /// Broadcast-to-delivery span a batch legitimately needs, in
        /// steps; younger batches are set aside, not blamed. Defaults
        /// to 0 (strict) for traces.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Fit scaling laws over saved sweep JSON and judge the registered
    /// claims those sweeps exercise.
    Report {
        /// One or more files produced by `sweep --format json`.
        results: Vec<PathBuf>,
        /// Slope tolerance override for claim judging.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Also print permissionless-suitability verdicts for protocols
        /// with both an n-axis latency and communication fit.
        #[arg(long)]
        classify: bool,
    },
    /// Print the registered asymptotic claims.
    Claims,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    name: Option<String>,
    axis: String,
    values: Vec<FracValue>,
    seeds: u32,
    #[serde(default)]
    couple_np: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: ModelConfig,
    protocol: ProtocolConfig,
    #[serde(default)]
    run: RunControlConfig,
    experiment: Option<ExperimentSection>,
}

fn load(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn resolved(file: &ConfigFile) -> Result<RunConfig, String> {
    resolve(&file.model, &file.protocol, &file.run).map_err(|e| e.to_string())
}

fn dispatch(cli: Cli) -> Result<(), String> {
    tobsim::ensure_workers();
    match cli.cmd {
        Cmd::Run { config, trace_out } => cmd_run(&config, trace_out.as_deref()),
        Cmd::Sweep { config, format, out } => cmd_sweep(&config, &format, out.as_deref()),
        Cmd::Check { path, horizon } => cmd_check(&path, horizon),
        Cmd::Report {
            results,
            tolerance,
            classify,
        } => cmd_report(&results, tolerance, classify),
        Cmd::Claims => {
            print!("{}", claims_text());
            Ok(())
        }
    }
}

fn cmd_run(config: &Path, trace_out: Option<&Path>) -> Result<(), String> {
    let file = load(config)?;
    let mut cfg = resolved(&file)?;
    if trace_out.is_some() {
        cfg.trace_mode = tobsim_engine::TraceMode::Full;
    }
    let art = run(&cfg).map_err(|e| e.to_string())?;
    let eval = evaluate(&cfg, &art);
    let order = OrderSummary::from_report(&eval.order);
    let out = serde_json::json!({
        "config_digest": cfg.digest(),
        "record": eval.record,
        "order": order,
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    if let Some(path) = trace_out {
        std::fs::write(path, art.trace.serialize())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        eprintln!("trace written to {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(config: &Path, format: &str, out: Option<&Path>) -> Result<(), String> {
    let file = load(config)?;
    let section = file
        .experiment
        .as_ref()
        .ok_or("sweep needs an [experiment] section")?;
    let axis = Axis::parse(&section.axis)
        .ok_or_else(|| format!("unknown axis {:?}", section.axis))?;
    let values = section
        .values
        .iter()
        .map(|v| v.to_frac().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("experiment values must be non-empty".into());
    }
    if section.seeds == 0 {
        return Err("experiment needs at least one seed".into());
    }
    let base = resolved(&file)?;
    let name = section.name.clone().unwrap_or_else(|| {
        config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".to_string())
    });
    let mut spec = ExperimentSpec::new(&name, base, axis, values, section.seeds);
    if section.couple_np {
        spec = spec.coupled();
    }
    let result = tobsim::run_sweep(&spec);
    let text = match format {
        "json" => emit_json(&result),
        "csv" => emit_csv(&result),
        "plotdata" => emit_plotdata(&result),
        other => return Err(format!("unknown format {other:?} (json, csv, plotdata)")),
    };
    match out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    let done = result.done_rows().count();
    eprintln!("{}: {} of {} rows ran", result.name, done, result.rows.len());
    Ok(())
}

fn cmd_check(path: &Path, horizon: Option<u64>) -> Result<(), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let (order, what) = if text.starts_with("# trace") {
        let trace = Trace::parse(&text).map_err(|e| e.to_string())?;
        let end = trace.records().last().map(|r| r.time).unwrap_or(0);
        let report = check_order(&trace, horizon.unwrap_or(0), end, &[]);
        (OrderSummary::from_report(&report), "trace")
    } else {
        let file: ConfigFile =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg = resolved(&file)?;
        let art = run(&cfg).map_err(|e| e.to_string())?;
        let eval = evaluate(&cfg, &art);
        (OrderSummary::from_report(&eval.order), "run")
    };
    println!("{}", serde_json::to_string_pretty(&order).unwrap());
    if order.all_ok {
        eprintln!("{what}: ordered-broadcast contract holds");
        Ok(())
    } else {
        Err(format!("{what}: ordered-broadcast contract violated"))
    }
}

/// Fits from one saved sweep, plus what is needed to judge claims on it.
struct FittedSweep {
    result: SweepResult,
    latency_loglog: Option<ScalingFit>,
    latency_semilog: Option<ScalingFit>,
    comm_loglog: Option<ScalingFit>,
}

fn fit_result(result: SweepResult) -> FittedSweep {
    let latency = result.samples(|d| d.record.latency_mean);
    let comm = result.samples(|d| d.record.comm_amortized);
    FittedSweep {
        latency_loglog: fit_scaling(result.axis, Scale::LogLog, &latency),
        latency_semilog: fit_scaling(result.axis, Scale::SemiLog, &latency),
        comm_loglog: fit_scaling(result.axis, Scale::LogLog, &comm),
        result,
    }
}

/// Judge every registered claim this sweep exercises: power-law claims
/// need the matching axis, the semi-log latency claim needs an n-sweep.
fn judge(f: &FittedSweep, tolerance: Option<f64>) -> Vec<ClaimReport> {
    let Some(mid) = f.result.mid_params() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for claim in registry() {
        if claim.protocol.to_string() != f.result.protocol {
            continue;
        }
        let fit = match (claim.eval, claim.metric) {
            (ClaimEval::PowerLaw(axis), Metric::Latency) if axis == f.result.axis => {
                f.latency_loglog.as_ref()
            }
            (ClaimEval::PowerLaw(axis), Metric::Comm) if axis == f.result.axis => {
                f.comm_loglog.as_ref()
            }
            (ClaimEval::SemiLogGrowth, Metric::Latency) if f.result.axis == Axis::N => {
                f.latency_semilog.as_ref()
            }
            _ => None,
        };
        if let Some(fit) = fit {
            out.push(validate_claim(&claim, fit, &mid, tolerance));
        }
    }
    out
}

fn cmd_report(results: &[PathBuf], tolerance: Option<f64>, do_classify: bool) -> Result<(), String> {
    if results.is_empty() {
        return Err("report needs at least one sweep JSON file".into());
    }
    let mut fitted = Vec::new();
    let mut reports = Vec::new();
    for path in results {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let result = parse_json(&text)?;
        println!(
            "== {} ({} along {})",
            result.name,
            result.protocol,
            result.axis.name()
        );
        let f = fit_result(result);
        if let Some(fit) = &f.latency_loglog {
            print!("{}", tobsim::report::render_fit("latency", fit));
        }
        if let Some(fit) = &f.comm_loglog {
            print!("{}", tobsim::report::render_fit("comm", fit));
        }
        reports.extend(judge(&f, tolerance));
        fitted.push(f);
    }
    if !reports.is_empty() {
        println!();
        print!("{}", tobsim::report::render_claim_table(&reports));
    }
    if do_classify {
        let mut by_proto: BTreeMap<String, (Option<usize>, Option<usize>)> = BTreeMap::new();
        for (i, f) in fitted.iter().enumerate() {
            if f.result.axis == Axis::N {
                let slot = by_proto.entry(f.result.protocol.clone()).or_default();
                if f.latency_loglog.is_some() {
                    slot.0 = Some(i);
                }
                if f.comm_loglog.is_some() {
                    slot.1 = Some(i);
                }
            }
        }
        let mut verdicts = Vec::new();
        for (proto, slots) in by_proto {
            if let (Some(l), Some(c)) = slots {
                verdicts.push(classify(
                    &proto,
                    fitted[c].comm_loglog.as_ref().unwrap(),
                    fitted[l].latency_loglog.as_ref().unwrap(),
                    0.2,
                ));
            }
        }
        if !verdicts.is_empty() {
            println!();
            print!("{}", tobsim::report::render_verdicts(&verdicts));
        }
    }
    Ok(())
}

fn claims_text() -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<8} {:<36} {:<22} {}",
        "protocol", "metric", "form", "constants depend on", "exercised by"
    );
    let _ = writeln!(out, "{}", "-".repeat(110));
    for c in registry() {
        let how = match c.eval {
            ClaimEval::PowerLaw(axis) => format!("log-log slope along {}", axis.name()),
            ClaimEval::SemiLogGrowth => "semi-log straight line in n".to_string(),
            ClaimEval::Functional(what) => what.to_string(),
        };
        let _ = writeln!(
            out,
            "{:<12} {:<8} {:<36} {:<22} {}",
            c.protocol.to_string(),
            c.metric.name(),
            c.form,
            c.subscripts,
            how,
        );
    }
    out
}
