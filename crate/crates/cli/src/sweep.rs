use std::fmt::Write as _;

use bria::metrics::Coverage;

use crate::config::Config;
use crate::error::{create_dir, write_file, CliError};
use crate::run::{self, RunReport};
use crate::setup;

/// Parses `key=v1,v2,...`.
pub fn parse_axis(axis: &str) -> Result<(String, Vec<String>), CliError> {
    let (key, values) = axis
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("axis `{axis}`: expected key=v1,v2,...")))?;
    let key = key.trim();
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
    if key.is_empty() || values.iter().any(String::is_empty) {
        return Err(CliError::Validation(format!(
            "axis `{axis}`: empty key or value"
        )));
    }
    Ok((key.to_string(), values))
}

fn row(key: &str, value: &str, result: &Result<RunReport, CliError>) -> String {
    let clean = |s: &str| s.replace([',', '\n'], ";");
    match result {
        Ok(r) => {
            let s = &r.summary;
            let violations = s
                .coverage
                .iter()
                .filter(|(_, c)| *c == Coverage::ViolationSuspected)
                .count();
            let freq: Vec<String> = s
                .tail_frequency
                .iter()
                .map(|(t, f)| format!("{t}:{f:.6}"))
                .collect();
            format!(
                "{key},{},ok,{},{:.6},{:.6},{:.6},{},{violations},{},\n",
                clean(value),
                s.horizon,
                s.final_overestimation_rate,
                s.tail_reward,
                s.tail_estimate,
                s.tail_benchmark
                    .map_or(String::new(), |b| format!("{b:.6}")),
                freq.join(";"),
            )
        }
        Err(e) => format!(
            "{key},{},error,,,,,,,,{}\n",
            clean(value),
            clean(&e.to_string())
        ),
    }
}

/// Runs one child per axis value, in parallel, and writes `sweep.csv`.
pub fn execute(cfg: &Config, axis: &str) -> Result<String, CliError> {
    let (key, values) = parse_axis(axis)?;
    let out = setup::output_dir(cfg);
    let mut children: Vec<Config> = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(&key, v.as_str());
            c.set(
                "output.dir",
                out.join(format!("{key}={v}")).to_string_lossy(),
            );
            c
        })
        .collect();

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results: Vec<Result<RunReport, CliError>> = Vec::with_capacity(children.len());
    // Config tracks used keys in a RefCell, so each child owns its copy.
    while !children.is_empty() {
        let chunk: Vec<Config> = children.drain(..workers.min(children.len())).collect();
        let batch: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .into_iter()
                .map(|c| s.spawn(move || run::execute(&c)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(CliError::Runtime("child run panicked".into())))
                })
                .collect()
        });
        results.extend(batch);
    }

    let mut csv = String::from(
        "axis,value,status,horizon,final_L_over_T,tail_reward,tail_estimate,tail_benchmark,violations,tail_frequency,error\n",
    );
    let mut text = String::new();
    for (v, r) in values.iter().zip(&results) {
        csv.push_str(&row(&key, v, r));
        match r {
            Ok(r) => {
                let _ = writeln!(
                    text,
                    "{key}={v} ok tail_reward {:.6} tail_estimate {:.6} final_L_over_T {:.6}",
                    r.summary.tail_reward,
                    r.summary.tail_estimate,
                    r.summary.final_overestimation_rate
                );
            }
            Err(e) => {
                let _ = writeln!(text, "{key}={v} error {e}");
            }
        }
    }
    create_dir(&out)?;
    write_file(&out.join("sweep.csv"), csv)?;
    if results.iter().all(Result::is_err) {
        return Err(CliError::Runtime(format!("every sweep run failed\n{text}")));
    }
    Ok(text)
}
