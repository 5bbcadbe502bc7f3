//! Plain-text rendering of claim evaluations and suitability verdicts:
//! fixed-width tables that line up in a terminal and diff cleanly.

use std::fmt::Write as _;

use crate::claims::{ClaimReport, ClaimVerdict};
use crate::classify::PermissionlessVerdict;
use crate::fit::{Scale, ScalingFit};

pub fn verdict_word(v: ClaimVerdict) -> &'static str {
    match v {
        ClaimVerdict::Validated => "validated",
        ClaimVerdict::ConsistentWith => "consistent-with",
        ClaimVerdict::Inconclusive => "inconclusive",
        ClaimVerdict::Refuted => "REFUTED",
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".to_string())
}

pub fn render_claim_table(reports: &[ClaimReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<8} {:<34} {:>9} {:>9} {:>7} {:<15}",
        "protocol", "metric", "claimed form", "expected", "measured", "r2", "verdict"
    );
    let _ = writeln!(out, "{}", "-".repeat(100));
    for r in reports {
        let _ = writeln!(
            out,
            "{:<12} {:<8} {:<34} {:>9} {:>9} {:>7} {:<15}",
            r.protocol,
            r.metric,
            r.form,
            fmt_opt(r.expected),
            fmt_opt(r.measured),
            fmt_opt(r.r2),
            verdict_word(r.verdict),
        );
        if !r.note.is_empty() {
            let _ = writeln!(out, "{:<12}   {}", "", r.note);
        }
    }
    out
}

pub fn render_fit(name: &str, fit: &ScalingFit) -> String {
    let scale = match fit.scale {
        Scale::LogLog => "log-log",
        Scale::SemiLog => "semi-log",
    };
    let mut line = format!(
        "{name}: {scale} along {} -> slope {:.4} +/- {:.4}, r2 {:.4}, {} points",
        fit.axis.name(),
        fit.slope,
        fit.ci95,
        fit.r2,
        fit.points.len(),
    );
    if fit.excluded > 0 {
        let _ = write!(line, " ({} excluded)", fit.excluded);
    }
    if !fit.meets_preconditions {
        line.push_str(" [below the 4-point/10-seed floor]");
    }
    line.push('\n');
    line
}

pub fn render_verdicts(verdicts: &[PermissionlessVerdict]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>12} {:>15} {:<10}",
        "protocol", "comm~n^s", "latency~n^s", "suited?"
    );
    let _ = writeln!(out, "{}", "-".repeat(55));
    for v in verdicts {
        let _ = writeln!(
            out,
            "{:<12} {:>12.3} {:>15.3} {:<10}",
            v.protocol,
            v.comm_slope_n,
            v.latency_slope_n,
            if v.suited { "yes" } else { "no" },
        );
        let _ = writeln!(out, "{:<12}   {}", "", v.reason);
    }
    out
}
