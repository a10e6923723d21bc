use std::io::Write;

use crate::error::{Error, Result};
use crate::interval::Preset;
use crate::sim::{Histogram, MethodOutcome, ReplicateRecord, ScenarioSummary};

/// Columns of `summary.csv`, one row per method. Tolerance-content columns
/// `tol_<β>` follow, one per requested β.
pub const SUMMARY_COLUMNS: [&str; 27] = [
    "scenario",
    "K",
    "N",
    "tau2",
    "mu",
    "dist",
    "v",
    "mean_I2",
    "L_T",
    "method",
    "label",
    "attempted",
    "successes",
    "failures",
    "failure_reasons",
    "mean_C",
    "median_C",
    "mean_abs_dev",
    "mean_rel_length",
    "norm_mae",
    "prop_C_gt_99",
    "theta_new_freq",
    "mean_length",
    "degenerate",
    "cdf_fallbacks",
    "reps",
    "level",
];

pub const HISTOGRAM_COLUMNS: [&str; 3] = ["bin_lo", "bin_hi", "count"];

pub const RECORD_COLUMNS: [&str; 16] = [
    "rep",
    "method",
    "status",
    "lower",
    "upper",
    "coverage",
    "length",
    "covers_new",
    "reason",
    "q",
    "i2",
    "tau2_dl",
    "tau2_reml",
    "mu_hat",
    "theta_new",
    "cdf_fallbacks",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("writing CSV", io),
        other => Error::numeric(format!("writing CSV: {other:?}")),
    }
}

/// Shortest round-trip decimal form.
fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Column name for the tolerance content at `beta`.
pub fn tolerance_column(beta: f64) -> String {
    format!("tol_{beta}")
}

pub fn write_summary_csv<W: Write>(
    s: &ScenarioSummary,
    betas: &[f64],
    level: f64,
    w: W,
) -> Result<()> {
    let mut out = writer(w);
    let mut header: Vec<String> = SUMMARY_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend(betas.iter().map(|&b| tolerance_column(b)));
    out.write_record(&header).map_err(csv_err)?;
    for m in &s.methods {
        let st = m.stats.as_ref();
        let reasons: Vec<String> = m
            .failure_reasons
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let mut row = vec![
            s.index.to_string(),
            s.k.to_string(),
            s.n.clone(),
            num(s.tau2),
            num(s.mu),
            s.dist.clone(),
            num(s.v),
            num(s.mean_i2),
            num(s.l_t),
            m.method.slug(),
            m.method.label(),
            m.attempted.to_string(),
            (m.attempted - m.failures).to_string(),
            m.failures.to_string(),
            reasons.join(";"),
            opt(st.map(|x| x.mean_c)),
            opt(st.map(|x| x.median_c)),
            opt(st.map(|x| x.mean_abs_dev)),
            opt(st.map(|x| x.mean_rel_length)),
            opt(st.map(|x| x.norm_mae)),
            opt(st.map(|x| x.prop_c_gt_99)),
            num(m.theta_new_freq),
            num(m.mean_length),
            m.degenerate.to_string(),
            s.cdf_fallbacks.to_string(),
            s.reps.to_string(),
            num(level),
        ];
        for &b in betas {
            let v = st.and_then(|x| x.tolerance_content.iter().find(|t| t.0 == b).map(|t| t.1));
            row.push(opt(v));
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("writing CSV", e))
}

pub fn write_histogram_csv<W: Write>(h: &Histogram, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(HISTOGRAM_COLUMNS).map_err(csv_err)?;
    for (lo, hi, c) in h.rows() {
        out.write_record([num(lo), num(hi), c.to_string()])
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("writing CSV", e))
}

/// Long format: one row per (replicate, attempted method).
pub fn write_records_csv<W: Write>(
    records: &[ReplicateRecord],
    methods: &[Preset],
    w: W,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for r in records {
        for (m, o) in methods.iter().zip(&r.outcomes) {
            let (status, lower, upper, cov, len, hit, reason) = match *o {
                MethodOutcome::Interval {
                    lower,
                    upper,
                    coverage,
                    length,
                    covers_new,
                } => (
                    "ok",
                    num(lower),
                    num(upper),
                    num(coverage),
                    num(length),
                    u8::from(covers_new).to_string(),
                    String::new(),
                ),
                MethodOutcome::Failed { reason } => (
                    "failed",
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    reason.code().to_string(),
                ),
                MethodOutcome::Skipped => continue,
            };
            out.write_record([
                r.rep.to_string(),
                m.slug(),
                status.to_string(),
                lower,
                upper,
                cov,
                len,
                hit,
                reason,
                num(r.q),
                num(r.i2),
                num(r.tau2_dl),
                opt(r.tau2_reml),
                num(r.mu_hat),
                num(r.theta_new),
                r.cdf_fallbacks.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::io("writing CSV", e))
}
