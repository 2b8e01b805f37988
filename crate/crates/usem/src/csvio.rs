//! CSV emission for convergence records, and the parse-back used to verify
//! round trips. Floats print in shortest round-trip form; absent fields are
//! empty cells. Column order is fixed.

use crate::study::{ConvergenceRecord, HarnessError};
use std::path::Path;

pub const CSV_HEADER: &str = "problem,N,h,p,dofs,stabilized,l2,h1,eig1,eig2,eig3,condA,condM,runtime";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_csv(records: &[ConvergenceRecord]) -> Result<String, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let eig = |i: usize| r.eig.get(i).map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.problem,
            r.n,
            r.h,
            r.p,
            r.dofs,
            r.stabilized,
            opt(r.l2),
            opt(r.h1),
            eig(0),
            eig(1),
            eig(2),
            opt(r.cond_a),
            opt(r.cond_m),
            r.runtime,
        ));
    }
    Ok(out)
}

pub fn emit_csv(records: &[ConvergenceRecord], path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, format_csv(records)?)?;
    Ok(())
}

/// Parse a file produced by [`format_csv`]; bitwise inverse for finite
/// fields thanks to shortest round-trip float formatting.
pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header != CSV_HEADER {
        return Err(format!("unexpected header '{header}'"));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 14 {
            return Err(format!("line {}: expected 14 columns, got {}", i + 2, cols.len()));
        }
        let req = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
        let optf = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() { Ok(None) } else { req(s).map(Some) }
        };
        let mut eig = Vec::new();
        for c in &cols[8..11] {
            if let Some(v) = optf(c)? {
                eig.push(v);
            }
        }
        records.push(ConvergenceRecord {
            problem: cols[0].to_string(),
            n: cols[1].parse().map_err(|e| format!("line {}: {e}", i + 2))?,
            h: req(cols[2])?,
            p: cols[3].parse().map_err(|e| format!("line {}: {e}", i + 2))?,
            dofs: cols[4].parse().map_err(|e| format!("line {}: {e}", i + 2))?,
            stabilized: match cols[5] {
                "true" => true,
                "false" => false,
                other => return Err(format!("line {}: bad boolean '{other}'", i + 2)),
            },
            l2: optf(cols[6])?,
            h1: optf(cols[7])?,
            eig,
            cond_a: optf(cols[11])?,
            cond_m: optf(cols[12])?,
            runtime: req(cols[13])?,
        });
    }
    Ok(records)
}
