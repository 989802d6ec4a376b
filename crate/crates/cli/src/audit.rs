use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use bria::io::{read_allowance, read_trace};
use bria::metrics::overestimation_trajectory;

use crate::artifacts::{
    allowance_totals, coverage_csv, coverage_reports, manifest, overestimation_csv,
};
use crate::error::{create_dir, write_file, CliError};
use crate::setup::AuditSettings;

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Audits a run directory holding `trace.csv` and `hypotheses.csv`, plus
/// `ledger.csv` when the allowance bound should be checked.
pub fn execute(
    dir: &Path,
    settings: AuditSettings,
    out: Option<PathBuf>,
) -> Result<String, CliError> {
    let trace_path = dir.join("trace.csv");
    let trace = read_trace(open(&trace_path)?, open(&dir.join("hypotheses.csv"))?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", trace_path.display())))?;
    if trace.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: trace is empty",
            trace_path.display()
        )));
    }
    let ledger_path = dir.join("ledger.csv");
    let rows = if ledger_path.exists() {
        let (ids, rows) = read_allowance(open(&ledger_path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", ledger_path.display())))?;
        if rows.len() != trace.len() || !ids.iter().map(String::as_str).eq(trace.hypothesis_ids()) {
            return Err(CliError::Validation(format!(
                "{}: ledger does not match the trace ({} rounds, {} hypotheses; trace has {} and {})",
                ledger_path.display(),
                rows.len(),
                ids.len(),
                trace.len(),
                trace.logs().len()
            )));
        }
        Some(rows)
    } else {
        None
    };
    let reports = coverage_reports(&trace, &settings, rows.as_deref())?;
    let allowance = rows.as_deref().map(allowance_totals);
    let l = overestimation_trajectory(&trace);

    let mut text = String::new();
    let _ = writeln!(text, "horizon {}", trace.len());
    let _ = writeln!(text, "tail_fraction {:.6}", settings.tail);
    match (settings.margin, &rows) {
        (Some(m), _) => {
            let _ = writeln!(text, "divergence_margin {m:.6}");
        }
        (None, Some(_)) => {
            let _ = writeln!(text, "divergence_margin per_hypothesis_allowance");
        }
        (None, None) => {
            let _ = writeln!(text, "divergence_margin {:.6}", 1.0);
        }
    }
    let _ = writeln!(
        text,
        "final_L_over_T {:.6}",
        l.last().copied().unwrap_or(0.0) / trace.len() as f64
    );
    let bound = match &allowance {
        Some(a) => {
            if l.iter().zip(a).all(|(v, a)| *v <= a + 1e-9) {
                "holds"
            } else {
                "violated"
            }
        }
        None => "unavailable",
    };
    let _ = writeln!(text, "allowance_bound {bound}");
    for r in &reports {
        let _ = writeln!(text, "coverage {} {}", r.hypothesis_id, r.classification);
    }

    let out = out.unwrap_or_else(|| dir.to_path_buf());
    create_dir(&out)?;
    write_file(&out.join("coverage.csv"), coverage_csv(&reports))?;
    write_file(
        &out.join("overestimation.csv"),
        overestimation_csv(&l, allowance.as_deref()),
    )?;
    write_file(&out.join("audit.txt"), &text)?;
    let settings_text = format!(
        "tail = {}\nmargin = {}\n",
        settings.tail,
        settings
            .margin
            .map_or("auto".to_string(), |m| m.to_string())
    );
    write_file(
        &out.join("audit_manifest.txt"),
        manifest(
            "audit",
            dir,
            &settings_text,
            &["coverage.csv", "overestimation.csv", "audit.txt"],
        ),
    )?;
    Ok(text)
}
