//! Report files shared by the commands.

use std::fmt::Write as _;
use std::path::Path;

use bria::io::{write_hypotheses_csv, write_trace_csv};
use bria::metrics::{allowance_coverage_audit, coverage_audit, CoverageReport};
use bria::numeric::sum;
use bria::Trace;

use crate::error::{write_file, CliError};
use crate::setup::AuditSettings;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> bria::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::runtime)?;
    Ok(buf)
}

pub fn write_trace_files(dir: &Path, trace: &Trace) -> Result<(), CliError> {
    write_file(
        &dir.join("trace.csv"),
        csv_bytes(|b| write_trace_csv(trace, b))?,
    )?;
    write_file(
        &dir.join("hypotheses.csv"),
        csv_bytes(|b| write_hypotheses_csv(trace, b))?,
    )
}

/// Coverage reports for a trace. An explicit margin applies to every
/// hypothesis. With `auto`, each hypothesis is held to its own allowance
/// when the per-round allowances are known, and to 1.0 otherwise.
pub fn coverage_reports(
    trace: &Trace,
    settings: &AuditSettings,
    allowance: Option<&[Vec<f64>]>,
) -> Result<Vec<CoverageReport>, CliError> {
    match (settings.margin, allowance) {
        (None, Some(rows)) => {
            allowance_coverage_audit(trace, rows, settings.tail).map_err(CliError::runtime)
        }
        _ => {
            let params = settings.params(1.0);
            trace
                .hypothesis_ids()
                .map(|id| coverage_audit(trace, id, &params))
                .collect::<bria::Result<Vec<_>>>()
                .map_err(CliError::runtime)
        }
    }
}

/// Per-round total allowance.
pub fn allowance_totals(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| sum(r.iter().copied())).collect()
}

/// Columns `hypothesis_id, classification, rejections, first_rejection,
/// last_rejection, tested, record_at_last_rejection`.
pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut s = String::from(
        "hypothesis_id,classification,rejections,first_rejection,last_rejection,tested,record_at_last_rejection\n",
    );
    for r in reports {
        let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.hypothesis_id,
            r.classification,
            r.rejection_times.len(),
            opt(r.rejection_times.first().copied()),
            opt(r.rejection_times.last().copied()),
            r.tested_count,
            r.final_record().map_or(String::new(), |v| v.to_string()),
        );
    }
    s
}

/// Columns `t, L, allowance_total, within_bound`; the last two are empty
/// without a ledger.
pub fn overestimation_csv(l: &[f64], allowance: Option<&[f64]>) -> String {
    let mut s = String::from("t,L,allowance_total,within_bound\n");
    for (k, v) in l.iter().enumerate() {
        match allowance.and_then(|a| a.get(k)) {
            Some(a) => {
                let _ = writeln!(s, "{},{v},{a},{}", k + 1, u8::from(*v <= a + 1e-9));
            }
            None => {
                let _ = writeln!(s, "{},{v},,", k + 1);
            }
        }
    }
    s
}

/// Deterministic record of what produced a directory.
pub fn manifest(command: &str, source: &Path, settings: &str, files: &[&str]) -> String {
    let mut s = format!(
        "bria {}\ncommand {command}\nsource {}\n\n[settings]\n",
        env!("CARGO_PKG_VERSION"),
        source.display()
    );
    s.push_str(settings);
    s.push_str("\n[artifacts]\n");
    for f in files {
        s.push_str(f);
        s.push('\n');
    }
    s
}
