//! Tail statistics for finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::environments::Environment;
use crate::metrics::{overestimation_trajectory, tail_mean, AuditParams, Coverage, CoverageReport};
use crate::trace::Trace;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub horizon: usize,
    pub tail_start: usize,
    pub final_overestimation_rate: f64,
    pub tail_reward: f64,
    pub tail_estimate: f64,
    pub tail_benchmark: Option<f64>,
    /// Share of tail rounds choosing each option tag.
    pub tail_frequency: BTreeMap<String, f64>,
    pub coverage: Vec<(String, Coverage)>,
}

impl RunSummary {
    pub fn frequency(&self, tag: &str) -> f64 {
        self.tail_frequency.get(tag).copied().unwrap_or(0.0)
    }

    /// `key value` lines, numbers with 6 decimals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "horizon {}", self.horizon);
        let _ = writeln!(s, "tail_start {}", self.tail_start);
        let _ = writeln!(s, "final_L_over_T {:.6}", self.final_overestimation_rate);
        let _ = writeln!(s, "tail_reward {:.6}", self.tail_reward);
        let _ = writeln!(s, "tail_estimate {:.6}", self.tail_estimate);
        if let Some(b) = self.tail_benchmark {
            let _ = writeln!(s, "tail_benchmark {b:.6}");
        }
        for (tag, f) in &self.tail_frequency {
            let _ = writeln!(s, "tail_frequency {tag} {f:.6}");
        }
        for (id, c) in &self.coverage {
            let _ = writeln!(s, "coverage {id} {c}");
        }
        s
    }
}

/// Benchmarks come from `env.benchmark` evaluated on each recorded problem.
pub fn summarize(
    trace: &Trace,
    env: Option<&dyn Environment>,
    tail_fraction: f64,
    reports: &[CoverageReport],
) -> RunSummary {
    let n = trace.len();
    let params = AuditParams {
        tail_fraction,
        ..AuditParams::default()
    };
    let tail_start = params.tail_start(n);
    let rewards: Vec<f64> = trace.rounds().iter().map(|r| r.reward).collect();
    let estimates: Vec<f64> = trace.rounds().iter().map(|r| r.estimate()).collect();
    let benchmark = env.and_then(|e| {
        trace
            .rounds()
            .iter()
            .enumerate()
            .map(|(k, r)| e.benchmark(k + 1, &r.problem))
            .collect::<Option<Vec<f64>>>()
    });
    let mut freq: BTreeMap<String, f64> = BTreeMap::new();
    let tail = trace
        .rounds()
        .get(tail_start.saturating_sub(1)..)
        .unwrap_or(&[]);
    for r in tail {
        *freq.entry(r.choice().tag().to_string()).or_default() += 1.0;
    }
    for v in freq.values_mut() {
        *v /= tail.len() as f64;
    }
    RunSummary {
        horizon: n,
        tail_start,
        final_overestimation_rate: overestimation_trajectory(trace)
            .last()
            .map_or(0.0, |l| l / n as f64),
        tail_reward: tail_mean(&rewards, tail_fraction),
        tail_estimate: tail_mean(&estimates, tail_fraction),
        tail_benchmark: benchmark.map(|b| tail_mean(&b, tail_fraction)),
        tail_frequency: freq,
        coverage: reports
            .iter()
            .map(|r| (r.hypothesis_id.clone(), r.classification))
            .collect(),
    }
}
