//! Rationality metrics over a [`Trace`]: overestimation, rejections,
//! empirical records, test-set pruning, the coverage audit and factor
//! projection.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::trace::{
    AgentStep, DecisionProblem, HypothesisLog, OptionToken, Round, RoundSet, Trace,
};

fn check_horizon(trace: &Trace, t: usize) -> Result<()> {
    if t > trace.len() {
        Err(Error::Range {
            t,
            len: trace.len(),
        })
    } else {
        Ok(())
    }
}

/// `L_T = Σ_{t ≤ T} (estimate_t − reward_t)`.
pub fn cumulative_overestimation(trace: &Trace, t: usize) -> Result<f64> {
    check_horizon(trace, t)?;
    Ok(trace.rounds()[..t]
        .iter()
        .map(|r| r.estimate() - r.reward)
        .collect::<CompensatedSum>()
        .value())
}

/// `L_1, …, L_N` in one pass.
pub fn overestimation_trajectory(trace: &Trace) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    trace
        .rounds()
        .iter()
        .map(|r| {
            acc.add(r.estimate() - r.reward);
            acc.value()
        })
        .collect()
}

/// Rounds `t ≤ T` where the hypothesis promised strictly more than the
/// agent estimated.
pub fn rejection_times(trace: &Trace, hypothesis: &str, t: usize) -> Result<Vec<usize>> {
    let log = trace.log(hypothesis)?;
    check_horizon(trace, t)?;
    Ok(rejections(trace.rounds(), log, t))
}

fn rejections(rounds: &[Round], log: &HypothesisLog, t: usize) -> Vec<usize> {
    (1..=t)
        .filter(|&s| log.promise(s) > rounds[s - 1].estimate())
        .collect()
}

fn validate_test_set(trace: &Trace, log: &HypothesisLog, test_set: &RoundSet) -> Result<()> {
    for &t in test_set {
        let round = trace.round(t)?;
        let rec = log.at(t).choice();
        if rec.id() != round.choice().id() {
            return Err(Error::InvalidTestSet {
                hypothesis: log.id().to_string(),
                round: t,
                choice: round.choice().id().to_string(),
                recommendation: rec.id().to_string(),
            });
        }
    }
    Ok(())
}

/// `Σ_{t ∈ M, t ≤ T} (reward_t − promise_t)`.
pub fn empirical_record(
    trace: &Trace,
    hypothesis: &str,
    test_set: &RoundSet,
    t: usize,
) -> Result<f64> {
    let log = trace.log(hypothesis)?;
    check_horizon(trace, t)?;
    validate_test_set(trace, log, test_set)?;
    Ok(test_set
        .range(..=t)
        .map(|&s| trace.rounds()[s - 1].reward - log.promise(s))
        .collect::<CompensatedSum>()
        .value())
}

/// Drops the rounds where the hypothesis promised exactly 0. Testing such
/// rounds can only raise the record, so the pruned record is never larger.
pub fn prune_test_set(test_set: &RoundSet, hypothesis: &str, trace: &Trace) -> Result<RoundSet> {
    let log = trace.log(hypothesis)?;
    validate_test_set(trace, log, test_set)?;
    Ok(test_set
        .iter()
        .copied()
        .filter(|&t| log.promise(t) != 0.0)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coverage {
    NeverOutpromised,
    FinitelyRejected,
    RecordDiverging,
    ViolationSuspected,
}

impl Coverage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coverage::NeverOutpromised => "NEVER_OUTPROMISED",
            Coverage::FinitelyRejected => "FINITELY_REJECTED",
            Coverage::RecordDiverging => "RECORD_DIVERGING",
            Coverage::ViolationSuspected => "VIOLATION_SUSPECTED",
        }
    }

    pub fn is_covered(&self) -> bool {
        !matches!(self, Coverage::ViolationSuspected)
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Coverage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "NEVER_OUTPROMISED" => Coverage::NeverOutpromised,
            "FINITELY_REJECTED" => Coverage::FinitelyRejected,
            "RECORD_DIVERGING" => Coverage::RecordDiverging,
            "VIOLATION_SUSPECTED" => Coverage::ViolationSuspected,
            _ => return Err(Error::value(format!("unknown coverage class `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditParams {
    /// Fraction of the run, counted from the end, treated as the tail.
    pub tail_fraction: f64,
    pub divergence_margin: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        Self {
            tail_fraction: 0.5,
            divergence_margin: 1.0,
        }
    }
}

impl AuditParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::parameter(format!(
                "tail fraction {} outside (0,1]",
                self.tail_fraction
            )));
        }
        if !self.divergence_margin.is_finite() {
            return Err(Error::parameter("divergence margin must be finite"));
        }
        Ok(())
    }

    /// First round of the tail window.
    pub fn tail_start(&self, len: usize) -> usize {
        let tail = ((len as f64) * self.tail_fraction).round() as usize;
        len - tail.clamp(1, len.max(1)) + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub hypothesis_id: String,
    pub rejection_times: Vec<usize>,
    pub record_at_rejections: Vec<(usize, f64)>,
    pub tested_count: usize,
    pub classification: Coverage,
}

impl CoverageReport {
    pub fn final_record(&self) -> Option<f64> {
        self.record_at_rejections.last().map(|&(_, r)| r)
    }
}

/// Finite-horizon proxy for the coverage criterion, using the trace's own
/// test membership for the hypothesis.
///
/// The record sequence at rejections counts as diverging when, starting
/// from the last rejection before the tail (or the first in the tail),
/// it ends no higher than it started and below `-divergence_margin`. A
/// record can only fall below a nonnegative margin by decreasing, so the
/// strict part of the decrease is carried by the margin; the tail itself
/// may be flat, as it is for a broke hypothesis that the auction re-tests
/// only at the rate its allowance grows.
pub fn coverage_audit(
    trace: &Trace,
    hypothesis: &str,
    params: &AuditParams,
) -> Result<CoverageReport> {
    params.validate()?;
    let log = trace.log(hypothesis)?;
    if trace.is_empty() {
        return Err(Error::Empty("trace".into()));
    }
    let rounds = trace.rounds();
    let mut record = CompensatedSum::new();
    let mut rejection_times = Vec::new();
    let mut record_at_rejections = Vec::new();
    for (k, round) in rounds.iter().enumerate() {
        let t = k + 1;
        let promise = log.promise(t);
        if log.tested().contains(&t) {
            record.add(round.reward - promise);
        }
        if promise > round.estimate() {
            rejection_times.push(t);
            record_at_rejections.push((t, record.value()));
        }
    }
    let tail_start = params.tail_start(rounds.len());
    let classification = classify(&record_at_rejections, tail_start, params.divergence_margin);
    Ok(CoverageReport {
        hypothesis_id: hypothesis.to_string(),
        rejection_times,
        record_at_rejections,
        tested_count: log.tested().len(),
        classification,
    })
}

fn classify(records: &[(usize, f64)], tail_start: usize, margin: f64) -> Coverage {
    if records.is_empty() {
        return Coverage::NeverOutpromised;
    }
    let first_tail = records.partition_point(|&(t, _)| t < tail_start);
    if first_tail == records.len() {
        return Coverage::FinitelyRejected;
    }
    let anchor = first_tail.saturating_sub(1);
    let start = records[anchor].1;
    let last = records[records.len() - 1].1;
    if last <= start && last < -margin {
        Coverage::RecordDiverging
    } else {
        Coverage::ViolationSuspected
    }
}

/// Coverage audit of an auction run with one margin per hypothesis.
///
/// `allowance[t - 1][i]` is the cumulative allowance of the `i`-th
/// hypothesis after round `t`. At a rejection round `T` the auction keeps
/// the record below `promise_T - allowance_i(T - 1) <= 1 - allowance_i(T - 1)`,
/// so hypothesis `i` is judged against `max(allowance_i(T - 1) - 1, 0)` at
/// its last rejection `T`.
pub fn allowance_coverage_audit(
    trace: &Trace,
    allowance: &[Vec<f64>],
    tail_fraction: f64,
) -> Result<Vec<CoverageReport>> {
    if allowance.len() != trace.len() {
        return Err(Error::Structure(format!(
            "{} allowance rows for {} rounds",
            allowance.len(),
            trace.len()
        )));
    }
    let n = trace.logs().len();
    if let Some(t) = allowance.iter().position(|row| row.len() != n) {
        return Err(Error::Structure(format!(
            "round {}: {} allowances for {n} hypotheses",
            t + 1,
            allowance[t].len()
        )));
    }
    let params = AuditParams {
        tail_fraction,
        divergence_margin: 0.0,
    };
    let tail_start = params.tail_start(trace.len());
    trace
        .logs()
        .iter()
        .enumerate()
        .map(|(i, log)| {
            let mut report = coverage_audit(trace, log.id(), &params)?;
            if let Some(&last) = report.rejection_times.last() {
                let earned = if last > 1 {
                    allowance[last - 2][i]
                } else {
                    0.0
                };
                let margin = (earned - 1.0).max(0.0);
                report.classification = classify(&report.record_at_rejections, tail_start, margin);
            }
            Ok(report)
        })
        .collect()
}

fn project_option(option: &OptionToken, factor: usize, round: usize) -> Result<OptionToken> {
    let n = option.factors().len();
    if n == 0 {
        return Err(Error::Structure(format!(
            "round {round}: option `{}` is not a product option",
            option.id()
        )));
    }
    if factor == 0 || factor > n {
        return Err(Error::Structure(format!(
            "factor {factor} out of range 1..={n} at round {round}"
        )));
    }
    Ok(option.factors()[factor - 1].clone())
}

/// Projects a trace over product problems onto its `factor`-th component
/// (1-based). Estimates, rewards and test membership are unchanged.
pub fn project_trace(trace: &Trace, factor: usize) -> Result<Trace> {
    let mut out = Trace::new(trace.hypothesis_ids().map(str::to_string))?;
    for (k, round) in trace.rounds().iter().enumerate() {
        let t = k + 1;
        let mut options: Vec<OptionToken> = Vec::new();
        for o in round.problem.options() {
            let p = project_option(o, factor, t)?;
            if !options.iter().any(|q| q.id() == p.id()) {
                options.push(p);
            }
        }
        let problem = DecisionProblem::new(options)?;
        let step = AgentStep::new(project_option(round.choice(), factor, t)?, round.estimate())?;
        let advice = trace
            .logs()
            .iter()
            .map(|log| {
                let h = log.at(t);
                AgentStep::new(project_option(h.choice(), factor, t)?, h.estimate())
            })
            .collect::<Result<Vec<_>>>()?;
        let tested: Vec<usize> = trace
            .logs()
            .iter()
            .enumerate()
            .filter(|(_, log)| log.tested().contains(&t))
            .map(|(i, _)| i)
            .collect();
        out.push(problem, step, round.reward, advice, &tested)?;
    }
    Ok(out)
}

/// Mean of the values at rounds in the tail window.
pub fn tail_mean(values: &[f64], tail_fraction: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let params = AuditParams {
        tail_fraction,
        ..AuditParams::default()
    };
    let start = params.tail_start(values.len());
    let tail = &values[start - 1..];
    crate::numeric::sum(tail.iter().copied()) / tail.len() as f64
}
