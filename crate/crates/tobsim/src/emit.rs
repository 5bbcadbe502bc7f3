//! Result serialization: machine-readable JSON (lossless round trip),
//! flat CSV, and whitespace-separated plot data ready for gnuplot-style
//! tooling. Skipped grid points keep their row in the flat formats with
//! the metric cells left blank, so a sweep's shape is never hidden.

use std::fmt::Write as _;

use crate::sweep::{RowOutcome, SweepResult};

pub fn emit_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(result).expect("sweep results always serialize")
}

pub fn parse_json(text: &str) -> Result<SweepResult, String> {
    serde_json::from_str(text).map_err(|e| format!("not a sweep result: {e}"))
}

const CSV_HEADER: &str =
    "protocol,axis,value,seed,latency,comm,kp,tau,mu,u,orphan_ratio,order_ok,skipped";

fn cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        match &row.outcome {
            RowOutcome::Done(data) => {
                let r = &data.record;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},",
                    result.protocol,
                    result.axis.name(),
                    row.value_str,
                    row.seed,
                    cell(&r.latency_mean),
                    cell(&r.comm_amortized),
                    cell(&r.kp),
                    cell(&r.tau),
                    cell(&r.mu),
                    cell(&r.u),
                    cell(&r.orphan_ratio),
                    data.order.all_ok,
                );
            }
            RowOutcome::Skipped { reason } => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},,,,,,,,,{}",
                    result.protocol,
                    result.axis.name(),
                    row.value_str,
                    row.seed,
                    reason.replace(',', ";"),
                );
            }
        }
    }
    out
}

/// One line per grid point: value, then per-seed means aggregated to
/// mean and population stddev for latency and communication. Lines for
/// points whose every seed was skipped are omitted — there is nothing
/// to plot there.
pub fn emit_plotdata(result: &SweepResult) -> String {
    let mut out = String::from(
        "# value\tlatency_mean\tlatency_sd\tcomm_mean\tcomm_sd\tseeds\n",
    );
    let mut points: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in &result.rows {
        let Some(data) = row.data() else { continue };
        let slot = match points.iter_mut().find(|(p, _, _, _)| *p == row.point) {
            Some(s) => s,
            None => {
                points.push((row.point, row.value, Vec::new(), Vec::new()));
                points.last_mut().unwrap()
            }
        };
        if let Some(l) = data.record.latency_mean {
            slot.2.push(l);
        }
        if let Some(c) = data.record.comm_amortized {
            slot.3.push(c);
        }
    }
    points.sort_by_key(|(p, _, _, _)| *p);
    for (_, value, lat, com) in &points {
        let (lm, ls) = mean_sd(lat);
        let (cm, cs) = mean_sd(com);
        let _ = writeln!(
            out,
            "{value}\t{lm:.6}\t{ls:.6}\t{cm:.6}\t{cs:.6}\t{}",
            lat.len().max(com.len())
        );
    }
    out
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Axis, ExperimentSpec};
    use crate::sweep::run_sweep;
    use tobsim_net::{frac, ModelParams};
    use tobsim_protocols::{ProtocolKind, RunConfig};

    fn small_sweep(alpha_num: u64) -> SweepResult {
        let params = ModelParams {
            n: 4,
            delta: 1,
            alpha: frac(alpha_num, 5),
            kappa: 4,
            p: frac(1, 2),
            b: 32,
        };
        let mut base = RunConfig::new(ProtocolKind::Tendermint, params, 7);
        base.rounds = 2;
        let spec = ExperimentSpec::new(
            "emit-probe",
            base,
            Axis::N,
            vec![frac(4, 1), frac(8, 1)],
            2,
        );
        run_sweep(&spec)
    }

    #[test]
    fn json_round_trips_losslessly() {
        let result = small_sweep(0);
        let text = emit_json(&result);
        let back = parse_json(&text).unwrap();
        assert_eq!(result, back);
    }

    #[test]
    fn csv_has_one_line_per_row_plus_header() {
        let result = small_sweep(0);
        let csv = emit_csv(&result);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + result.rows.len());
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("tendermint,n,4,"));
    }

    #[test]
    fn skipped_rows_keep_their_place_with_blank_cells() {
        // alpha = 2/5 breaks the quorum admissibility bound, so every
        // row is skipped but still listed.
        let result = small_sweep(2);
        let csv = emit_csv(&result);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + result.rows.len());
        assert!(lines[1].contains(",,,,"));
        let plot = emit_plotdata(&result);
        assert_eq!(plot.lines().count(), 1, "only the comment header remains");
    }

    #[test]
    fn plotdata_aggregates_per_point() {
        let result = small_sweep(0);
        let plot = emit_plotdata(&result);
        let lines: Vec<&str> = plot.lines().collect();
        assert_eq!(lines.len(), 1 + 2, "header plus one line per grid point");
        assert!(lines[1].starts_with("4\t"));
        assert!(lines[2].starts_with("8\t"));
    }
}
