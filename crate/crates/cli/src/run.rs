use bria::agent::run_agent;
use bria::auction::{run_bria, AuctionConfig};
use bria::io::write_ledger_csv;
use bria::metrics::overestimation_trajectory;
use bria::summary::{summarize, RunSummary};

use crate::artifacts::{
    allowance_totals, coverage_csv, coverage_reports, manifest, overestimation_csv,
    write_trace_files,
};
use crate::config::Config;
use crate::error::{create_dir, write_file, CliError};
use crate::setup::{self, AgentKind};

pub struct RunReport {
    pub summary: RunSummary,
    pub rendered: String,
}

pub fn execute(cfg: &Config) -> Result<RunReport, CliError> {
    let kind = setup::agent_kind(cfg)?;
    let horizon = setup::horizon(cfg)?;
    let env_kind = cfg.require("env.kind")?.to_string();
    let mut env = setup::environment(cfg)?;
    let registry = setup::registry(cfg, "registry.path")?;
    let audit = setup::audit_settings(cfg)?;
    let out = setup::output_dir(cfg);
    let auction = if kind == AgentKind::Auction {
        Some(AuctionConfig {
            schedule: setup::schedule(cfg)?,
            seed: cfg.u64_or("agent.seed", 0)?,
            shuffle_registry: cfg.bool_or("agent.shuffle", false)?,
            audit: None,
        })
    } else {
        None
    };
    let mut agent = match kind {
        AgentKind::Auction => None,
        other => Some(setup::plain_agent(cfg, other)?),
    };
    cfg.reject_unused()?;

    let (trace, run) = match (&auction, agent.as_mut()) {
        (Some(ac), _) => {
            let run = run_bria(env.as_mut(), &registry, horizon, ac).map_err(CliError::runtime)?;
            (run.trace.clone(), Some(run))
        }
        (None, Some(a)) => (
            run_agent(env.as_mut(), &registry, a.as_mut(), horizon).map_err(CliError::runtime)?,
            None,
        ),
        (None, None) => unreachable!("an agent is always built"),
    };

    let rows: Option<Vec<Vec<f64>>> = run
        .as_ref()
        .map(|r| r.snapshots.iter().map(|s| s.allowance.clone()).collect());
    let reports = coverage_reports(&trace, &audit, rows.as_deref())?;
    let allowance = rows.as_deref().map(allowance_totals);
    let summary = summarize(&trace, Some(env.as_ref()), audit.tail, &reports);
    let rendered = format!(
        "env {env_kind}\nagent {}\n{}",
        cfg.get("agent.kind").unwrap_or("auction"),
        summary.render()
    );

    create_dir(&out)?;
    write_trace_files(&out, &trace)?;
    let mut files = vec!["trace.csv", "hypotheses.csv"];
    if let Some(run) = &run {
        let mut buf = Vec::new();
        write_ledger_csv(run, &mut buf).map_err(CliError::runtime)?;
        write_file(&out.join("ledger.csv"), buf)?;
        files.push("ledger.csv");
    }
    write_file(&out.join("coverage.csv"), coverage_csv(&reports))?;
    write_file(
        &out.join("overestimation.csv"),
        overestimation_csv(&overestimation_trajectory(&trace), allowance.as_deref()),
    )?;
    write_file(&out.join("summary.txt"), &rendered)?;
    files.extend(["coverage.csv", "overestimation.csv", "summary.txt"]);
    write_file(
        &out.join("manifest.txt"),
        manifest("run", cfg.path(), &cfg.render(), &files),
    )?;
    Ok(RunReport { summary, rendered })
}
