//! CSV and sidecar rendering. Numbers use 15 significant digits.

use std::io::{self, Write};

use sqbath::TrajectoryRecord;

use crate::runner::{SweepResult, SweepRow};

pub const TRAJECTORY_HEADER: &str = "t,fidelity,trace_err,herm_err,purity";
pub const SWEEP_HEADER: &str = "swept_param,value,t_star,F_max,F_at_t";

/// `%.15g`-style rendering: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn write_trajectory_csv<W: Write>(mut w: W, record: &TrajectoryRecord) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for i in 0..record.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig(record.times[i]),
            fmt_sig(record.fidelity[i]),
            fmt_sig(record.trace_err[i]),
            fmt_sig(record.herm_err[i]),
            fmt_sig(record.purity[i]),
        )?;
    }
    Ok(())
}

fn sweep_row(param: &str, row: &SweepRow) -> String {
    let value = match row.value {
        crate::config::SweepValue::Real(x) => fmt_sig(x),
        crate::config::SweepValue::Kind(k) => k.to_string(),
    };
    match &row.outcome {
        Ok(p) => format!("{param},{value},{},{},{}", fmt_sig(p.t_star), fmt_sig(p.f_max), fmt_sig(p.f_at_t)),
        Err(_) => format!("{param},{value},NaN,NaN,NaN"),
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in &result.rows {
        writeln!(w, "{}", sweep_row(result.param.key(), row))?;
    }
    Ok(())
}

/// Configuration document followed by `# key: value` metadata comments.
pub fn sidecar(document: &str, metadata: &[(String, String)]) -> String {
    let mut out = String::from(document);
    for (k, v) in metadata {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out
}
