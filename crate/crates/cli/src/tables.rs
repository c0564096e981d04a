//! Comma-separated diagnostics tables with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use elastowave::solver::{DiagnosticsRecord, DiagnosticsRow};

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// One header line naming the columns, then one line per row.
pub fn diagnostics_table(record: &DiagnosticsRecord) -> String {
    let mut out = DiagnosticsRow::COLUMNS.join(",");
    out.push('\n');
    for row in &record.rows {
        let line: Vec<String> = row.values().iter().map(|&v| number(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn factors_table(factors: &[f64]) -> String {
    let mut out = String::from("iteration,factor\n");
    for (k, f) in factors.iter().enumerate() {
        // factor k compares increments k + 1 and k
        writeln!(out, "{},{}", k + 2, number(*f)).expect("writing to a String");
    }
    out
}

/// Parses a table written by [`diagnostics_table`].
pub fn parse_diagnostics(text: &str) -> anyhow::Result<Vec<[f64; 13]>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow::anyhow!("empty table"))?;
    if header.split(',').collect::<Vec<_>>() != DiagnosticsRow::COLUMNS {
        anyhow::bail!("unexpected header {header:?}");
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let vals: Vec<f64> = l.split(',').map(str::parse).collect::<Result<_, _>>()?;
            vals.try_into().map_err(|v: Vec<f64>| anyhow::anyhow!("row {} has {} columns", i + 1, v.len()))
        })
        .collect()
}

pub fn write(path: &Path, text: &str) -> std::io::Result<()> {
    std::fs::write(path, text)
}
