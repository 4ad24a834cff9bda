//! Text, CSV and JSON rendering. Text and CSV numbers carry 12 significant
//! digits; JSON keeps full precision so witnesses replay exactly.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::coding::TrialSummary;
use crate::inequality::{FuzzSummary, InequalityReport};
use crate::rate::RateExponentPoint;
use crate::verify::{Sense, VerifySummary};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    /// Converts a nat-valued quantity for display.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / LN_2,
        }
    }
}

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits, fixed-point for
/// moderate magnitudes and scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = SIGNIFICANT_DIGITS - 1)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_else(|| "-".into())
}

fn csv_document(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn eq_csv(points: &[(f64, f64)], units: Units) -> String {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|&(s, v)| vec![fmt_num(s), fmt_num(units.convert(v))])
        .collect();
    csv_document(&["s".into(), "E_q".into()], &rows)
}

pub fn curve_header(a: usize) -> Vec<String> {
    let mut h: Vec<String> = ["R", "s_star", "value"].map(String::from).to_vec();
    h.extend((0..a).map(|i| format!("prior_{i}")));
    h
}

pub fn curve_row(p: &RateExponentPoint, units: Units) -> Vec<String> {
    let mut row = vec![
        fmt_num(units.convert(p.rate)),
        fmt_num(p.s_star),
        fmt_num(units.convert(p.value)),
    ];
    row.extend(p.prior_star.weights().iter().map(|&w| fmt_num(w)));
    row
}

pub fn curve_csv(points: &[RateExponentPoint], units: Units) -> String {
    let a = points.first().map_or(0, |p| p.prior_star.len());
    let rows: Vec<Vec<String>> = points.iter().map(|p| curve_row(p, units)).collect();
    csv_document(&curve_header(a), &rows)
}

pub const SIMULATE_HEADER: [&str; 7] = [
    "n",
    "M",
    "R_nats",
    "trials",
    "mean_avg_err",
    "mean_max_err",
    "exponent_proxy",
];

pub fn simulate_csv(rows: &[TrialSummary]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|t| {
            vec![
                t.n.to_string(),
                t.m.to_string(),
                fmt_num(t.rate_nats),
                t.trials.to_string(),
                fmt_num(t.mean_average_error),
                fmt_num(t.mean_max_error),
                fmt_num(t.exponent_proxy.unwrap_or(f64::INFINITY)),
            ]
        })
        .collect();
    csv_document(&SIMULATE_HEADER.map(String::from), &body)
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn verify_table(v: &VerifySummary) -> String {
    let rows: Vec<Vec<String>> = v
        .checks
        .iter()
        .map(|c| {
            let op = match c.sense {
                Sense::AtLeast => ">=",
                Sense::AtMost => "<=",
            };
            vec![
                c.check.clone(),
                c.evaluated.to_string(),
                c.skipped.to_string(),
                c.violations.to_string(),
                fmt_opt(c.worst),
                format!("{op} {}", fmt_num(c.bound)),
                if c.violations == 0 { "ok" } else { "FAIL" }.into(),
            ]
        })
        .collect();
    let mut out = format!(
        "instances {}  seed {}  tau {}\n",
        v.instances,
        v.seed,
        fmt_num(v.tau)
    );
    out.push_str(&table(
        &["check", "evaluated", "skipped", "violations", "worst", "bound", "status"],
        &rows,
    ));
    out
}

pub fn report_table(r: &InequalityReport, tau: f64) -> String {
    let mut rows = vec![
        vec!["inequality".into(), r.inequality.to_string()],
        vec!["lhs".into(), fmt_num(r.lhs)],
        vec!["rhs".into(), fmt_num(r.rhs)],
        vec!["gap".into(), fmt_num(r.gap)],
        vec!["scale".into(), fmt_num(r.scale)],
        vec!["gap/scale".into(), fmt_num(r.normalized_gap())],
        vec!["imag residue".into(), fmt_num(r.imag_residue)],
        vec!["support restricted".into(), r.support_restricted.to_string()],
    ];
    if let Some(f) = r.formulation_residual {
        rows.push(vec!["formulation residual".into(), fmt_num(f)]);
    }
    if let Some(w) = &r.witness {
        rows.push(vec!["s".into(), fmt_num(w.s)]);
        rows.push(vec!["seed".into(), w.seed.to_string()]);
        rows.push(vec!["instance".into(), w.instance.to_string()]);
    }
    rows.push(vec!["holds".into(), r.holds(tau).to_string()]);
    table(&["field", "value"], &rows)
}

pub fn fuzz_text(f: &FuzzSummary) -> String {
    let mut out = String::new();
    let mode = if f.exploratory { "exploratory" } else { "assertion" };
    let rows = vec![
        vec!["inequality".into(), f.inequality.to_string()],
        vec!["mode".into(), mode.into()],
        vec!["seed".into(), f.seed.to_string()],
        vec!["tau".into(), fmt_num(f.tau)],
        vec!["instances".into(), f.instances.to_string()],
        vec!["evaluated".into(), f.evaluated.to_string()],
        vec!["errors".into(), f.errors.to_string()],
        vec!["violations".into(), f.violations.to_string()],
        vec!["support restricted".into(), f.support_restricted.to_string()],
        vec!["min gap/scale".into(), fmt_num(f.min_normalized_gap)],
        vec!["max imag residue".into(), fmt_num(f.max_imag_residue)],
        vec!["max formulation residual".into(), fmt_opt(f.max_formulation_residual)],
        vec!["shrunk".into(), f.shrunk.to_string()],
    ];
    out.push_str(&table(&["field", "value"], &rows));
    for e in &f.error_samples {
        let _ = writeln!(out, "error: {e}");
    }
    if let Some(w) = f.worst.as_ref().and_then(|r| r.witness.as_ref()) {
        out.push_str("worst witness:\n");
        out.push_str(&w.to_json());
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
