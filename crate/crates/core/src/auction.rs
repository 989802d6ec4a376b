//! The hypothesis auction: allowance schedules, the wealth ledger,
//! first-price winner selection, settlement and the run driver.
//!
//! Registry positions are 0-based; schedules take the 1-based hypothesis
//! index `i = position + 1`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{run_agent, Agent, Decision};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::hypotheses::Hypothesis;
use crate::metrics::{
    allowance_coverage_audit, coverage_audit, overestimation_trajectory, AuditParams,
    CoverageReport,
};
use crate::numeric::CompensatedSum;
use crate::trace::{AgentStep, DecisionProblem, Round, RoundSet, Trace};

pub trait AllowanceSchedule: Send + Sync {
    fn name(&self) -> &str;

    /// Allowance `A(n, i)` for round `n ≥ 1` and index `i ≥ 1`.
    fn allowance(&self, n: usize, i: usize) -> f64;

    /// Indices among `1..=count` with positive allowance at round `n`.
    fn support(&self, n: usize, count: usize) -> Vec<usize> {
        (1..=count)
            .filter(|&i| self.allowance(n, i) > 0.0)
            .collect()
    }
}

/// `1/(n i²)` for `i < n`, else 0.
pub fn default_allowance(n: usize, i: usize) -> f64 {
    if i < n {
        1.0 / (n as f64 * (i as f64) * (i as f64))
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// [`default_allowance`].
    Harmonic,
    /// `1/(n i²)` for every `i`, without the `i < n` restriction.
    HarmonicFull,
}

impl Schedule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "harmonic" | "default" => Ok(Schedule::Harmonic),
            "harmonic_full" => Ok(Schedule::HarmonicFull),
            _ => Err(Error::Config(format!("unknown allowance schedule `{s}`"))),
        }
    }
}

impl AllowanceSchedule for Schedule {
    fn name(&self) -> &str {
        match self {
            Schedule::Harmonic => "harmonic",
            Schedule::HarmonicFull => "harmonic_full",
        }
    }

    fn allowance(&self, n: usize, i: usize) -> f64 {
        match self {
            Schedule::Harmonic => default_allowance(n, i),
            Schedule::HarmonicFull => 1.0 / (n as f64 * (i as f64) * (i as f64)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WealthLedger {
    wealth: Vec<CompensatedSum>,
    allowance: Vec<CompensatedSum>,
    record: Vec<CompensatedSum>,
    test_sets: Vec<RoundSet>,
    activation: Vec<Option<usize>>,
    settled: usize,
}

impl WealthLedger {
    pub fn new(count: usize) -> Self {
        Self {
            wealth: vec![CompensatedSum::new(); count],
            allowance: vec![CompensatedSum::new(); count],
            record: vec![CompensatedSum::new(); count],
            test_sets: vec![RoundSet::new(); count],
            activation: vec![None; count],
            settled: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.wealth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wealth.is_empty()
    }

    pub fn wealth(&self, pos: usize) -> f64 {
        self.wealth[pos].value()
    }

    pub fn allowance_received(&self, pos: usize) -> f64 {
        self.allowance[pos].value()
    }

    /// `Σ_{t ∈ test set} (reward_t − promise_t)`.
    pub fn record(&self, pos: usize) -> f64 {
        self.record[pos].value()
    }

    pub fn test_set(&self, pos: usize) -> &RoundSet {
        &self.test_sets[pos]
    }

    pub fn activation_round(&self, pos: usize) -> Option<usize> {
        self.activation[pos]
    }

    pub fn is_active(&self, pos: usize) -> bool {
        self.activation[pos].is_some()
    }

    pub fn settled_rounds(&self) -> usize {
        self.settled
    }

    pub fn total_wealth(&self) -> f64 {
        self.wealth
            .iter()
            .map(CompensatedSum::value)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn total_allowance(&self) -> f64 {
        self.allowance
            .iter()
            .map(CompensatedSum::value)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Marks every hypothesis with positive allowance at round `t` active.
    pub fn activate(&mut self, t: usize, schedule: &dyn AllowanceSchedule) {
        for i in schedule.support(t, self.len()) {
            self.activation[i - 1].get_or_insert(t);
        }
    }

    fn credit_allowance(&mut self, t: usize, schedule: &dyn AllowanceSchedule) -> Result<()> {
        if t != self.settled + 1 {
            return Err(Error::Consistency(format!(
                "settling round {t} after round {}",
                self.settled
            )));
        }
        self.activate(t, schedule);
        for i in schedule.support(t, self.len()) {
            let a = schedule.allowance(t, i);
            self.wealth[i - 1].add(a);
            self.allowance[i - 1].add(a);
        }
        self.settled = t;
        Ok(())
    }
}

/// Winner among `(promise, wealth)` bids: maximizes
/// `min(promise, max(wealth, 0))`, ties to the lowest position. Returns the
/// 0-based position and the clipped bid.
pub fn select_winner(bids: &[(f64, f64)]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &(promise, wealth)) in bids.iter().enumerate() {
        if !(0.0..=1.0).contains(&promise) {
            return Err(Error::value(format!("promise {promise} outside [0,1]")));
        }
        let bid = promise.min(wealth.max(0.0));
        if best.is_none_or(|(_, b)| bid > b) {
            best = Some((k, bid));
        }
    }
    best.ok_or_else(|| Error::Empty("bid list".into()))
}

/// Settles round `t`. Every hypothesis in the schedule's support receives
/// its allowance; the winner, if any, also receives the reward and pays its
/// clipped bid, and round `t` joins its test set.
pub fn settle_round(
    ledger: &mut WealthLedger,
    t: usize,
    winner: Option<(usize, f64, f64)>,
    reward: f64,
    schedule: &dyn AllowanceSchedule,
) -> Result<()> {
    ledger.activate(t, schedule);
    if let Some((pos, bid, promise)) = winner {
        if pos >= ledger.len() {
            return Err(Error::Consistency(format!(
                "winner position {pos} out of range"
            )));
        }
        let cap = ledger.wealth(pos).max(0.0);
        if bid < 0.0 || bid > cap || bid > promise {
            return Err(Error::Consistency(format!(
                "round {t}: bid {bid} exceeds wealth {cap} or promise {promise}"
            )));
        }
        if !ledger.is_active(pos) {
            return Err(Error::Consistency(format!(
                "round {t}: inactive winner {pos}"
            )));
        }
    }
    ledger.credit_allowance(t, schedule)?;
    if let Some((pos, bid, promise)) = winner {
        ledger.wealth[pos].add(reward);
        ledger.wealth[pos].add(-bid);
        ledger.record[pos].add(reward - promise);
        ledger.test_sets[pos].insert(t);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionStepResult {
    pub winner_index: usize,
    pub clipped_bid: f64,
    pub agent_step: AgentStep,
}

/// Post-settlement ledger state for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerSnapshot {
    pub wealth: Vec<f64>,
    pub allowance: Vec<f64>,
    pub record: Vec<f64>,
}

/// The auction as an [`Agent`]. Before any hypothesis is active it falls
/// back to the first option with estimate 0.
pub struct AuctionAgent {
    schedule: Box<dyn AllowanceSchedule>,
    ledger: WealthLedger,
    pending: Option<(usize, f64, f64)>,
    outcomes: Vec<Option<AuctionStepResult>>,
    snapshots: Vec<LedgerSnapshot>,
}

impl AuctionAgent {
    pub fn new(registry_len: usize, schedule: Box<dyn AllowanceSchedule>) -> Self {
        Self {
            schedule,
            ledger: WealthLedger::new(registry_len),
            pending: None,
            outcomes: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn ledger(&self) -> &WealthLedger {
        &self.ledger
    }

    pub fn schedule(&self) -> &dyn AllowanceSchedule {
        self.schedule.as_ref()
    }

    pub fn outcomes(&self) -> &[Option<AuctionStepResult>] {
        &self.outcomes
    }

    pub fn snapshots(&self) -> &[LedgerSnapshot] {
        &self.snapshots
    }

    fn into_parts(
        self,
    ) -> (
        WealthLedger,
        Vec<Option<AuctionStepResult>>,
        Vec<LedgerSnapshot>,
    ) {
        (self.ledger, self.outcomes, self.snapshots)
    }
}

impl Agent for AuctionAgent {
    fn decide(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        advice: &[AgentStep],
    ) -> Result<Decision> {
        if advice.len() != self.ledger.len() {
            return Err(Error::LengthMismatch {
                left: advice.len(),
                right: self.ledger.len(),
            });
        }
        self.ledger.activate(t, self.schedule.as_ref());
        let active: Vec<usize> = (0..advice.len())
            .filter(|&k| self.ledger.is_active(k))
            .collect();
        if active.is_empty() {
            self.pending = None;
            self.outcomes.push(None);
            let step = AgentStep::new(problem.first().clone(), 0.0)?;
            return Ok(Decision::deterministic(step, Vec::new()));
        }
        let bids: Vec<(f64, f64)> = active
            .iter()
            .map(|&k| (advice[k].estimate(), self.ledger.wealth(k)))
            .collect();
        let (w, bid) = select_winner(&bids)?;
        let pos = active[w];
        let step = AgentStep::new(advice[pos].choice().clone(), bid)?;
        self.pending = Some((pos, bid, advice[pos].estimate()));
        self.outcomes.push(Some(AuctionStepResult {
            winner_index: pos,
            clipped_bid: bid,
            agent_step: step.clone(),
        }));
        Ok(Decision::deterministic(step, vec![pos]))
    }

    fn observe(&mut self, t: usize, reward: f64) -> Result<()> {
        settle_round(
            &mut self.ledger,
            t,
            self.pending.take(),
            reward,
            self.schedule.as_ref(),
        )?;
        let n = self.ledger.len();
        self.snapshots.push(LedgerSnapshot {
            wealth: (0..n).map(|k| self.ledger.wealth(k)).collect(),
            allowance: (0..n).map(|k| self.ledger.allowance_received(k)).collect(),
            record: (0..n).map(|k| self.ledger.record(k)).collect(),
        });
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionConfig {
    pub schedule: Schedule,
    pub seed: u64,
    /// Permute the registry with `seed` before the run.
    pub shuffle_registry: bool,
    /// Audit parameters; by default each hypothesis is judged against its
    /// own allowance, see [`allowance_coverage_audit`].
    pub audit: Option<AuditParams>,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::Harmonic,
            seed: 0,
            shuffle_registry: false,
            audit: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BriaRun {
    pub trace: Trace,
    pub ledger: WealthLedger,
    pub snapshots: Vec<LedgerSnapshot>,
    pub outcomes: Vec<Option<AuctionStepResult>>,
    pub reports: Vec<CoverageReport>,
    pub schedule: Schedule,
    pub seed: u64,
}

impl BriaRun {
    pub fn registry_ids(&self) -> Vec<String> {
        self.trace.hypothesis_ids().map(str::to_string).collect()
    }
}

pub fn run_bria(
    env: &mut dyn Environment,
    registry: &[Hypothesis],
    horizon: usize,
    config: &AuctionConfig,
) -> Result<BriaRun> {
    if registry.is_empty() {
        return Err(Error::Empty("registry".into()));
    }
    let mut registry = registry.to_vec();
    if config.shuffle_registry {
        registry.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    }
    let mut agent = AuctionAgent::new(registry.len(), Box::new(config.schedule));
    let trace = run_agent(env, &registry, &mut agent, horizon)?;
    let (ledger, outcomes, snapshots) = agent.into_parts();
    let reports = match config.audit {
        Some(params) => registry
            .iter()
            .map(|h| coverage_audit(&trace, h.id(), &params))
            .collect::<Result<Vec<_>>>()?,
        None => {
            let allowance: Vec<Vec<f64>> = snapshots.iter().map(|s| s.allowance.clone()).collect();
            allowance_coverage_audit(&trace, &allowance, AuditParams::default().tail_fraction)?
        }
    };
    Ok(BriaRun {
        trace,
        ledger,
        snapshots,
        outcomes,
        reports,
        schedule: config.schedule,
        seed: config.seed,
    })
}

/// Results of re-checking the auction's exact invariants on a finished run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantReport {
    /// `max_T (L_T − Σ allowance_T)`; at most 0 up to rounding.
    pub overestimation_excess: f64,
    /// `max_T |Σ wealth − Σ allowance − Σ_{auctioned t ≤ T} (r_t − e_t)|`.
    pub identity_error: f64,
    pub rejection_checks: usize,
    /// `(hypothesis id, round)` where the shortfall bound failed.
    pub rejection_violations: Vec<(String, usize)>,
    pub maximality_violations: Vec<usize>,
    pub persistence_violations: Vec<(String, usize)>,
}

impl InvariantReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.overestimation_excess <= tol
            && self.identity_error <= tol
            && self.rejection_violations.is_empty()
            && self.maximality_violations.is_empty()
            && self.persistence_violations.is_empty()
    }
}

/// Re-derives the ledger invariants from the trace and per-round snapshots.
///
/// The rejection check uses the allowance credited before round `T`: if
/// `i` outpromises the agent at `T`, then
/// `Σ_{t ∈ M_i, t < T} (promise_t − r_t) > Σ_{n < T} A(n, i) − promise_T`.
pub fn check_invariants(run: &BriaRun) -> Result<InvariantReport> {
    let trace = &run.trace;
    let n = trace.len();
    if run.snapshots.len() != n || run.outcomes.len() != n {
        return Err(Error::Structure("snapshots do not match the trace".into()));
    }
    let logs = trace.logs();
    let h = logs.len();
    let mut report = InvariantReport {
        overestimation_excess: f64::NEG_INFINITY,
        ..InvariantReport::default()
    };
    let l = overestimation_trajectory(trace);
    let mut auctioned = CompensatedSum::new();
    let mut shortfall = vec![CompensatedSum::new(); h];
    let mut nonneg = vec![false; h];
    let zero = vec![0.0; h];
    for (k, round) in trace.rounds().iter().enumerate() {
        let t = k + 1;
        let snap = &run.snapshots[k];
        let (prev_w, prev_a) = if k == 0 {
            (&zero, &zero)
        } else {
            (
                &run.snapshots[k - 1].wealth,
                &run.snapshots[k - 1].allowance,
            )
        };
        let total_a = snap
            .allowance
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value();
        let total_w = snap
            .wealth
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value();
        report.overestimation_excess = report.overestimation_excess.max(l[k] - total_a);

        let mut expected = f64::NEG_INFINITY;
        for (i, log) in logs.iter().enumerate() {
            if prev_a[i] > 0.0 || run.ledger.activation_round(i).is_some_and(|a| a <= t) {
                expected = expected.max(log.promise(t).min(prev_w[i].max(0.0)));
            }
            let promise = log.promise(t);
            if promise > round.estimate() {
                report.rejection_checks += 1;
                if shortfall[i].value() <= prev_a[i] - promise {
                    report.rejection_violations.push((log.id().to_string(), t));
                }
            }
            if log.tested().contains(&t) {
                shortfall[i].add(promise - round.reward);
            }
            if nonneg[i] && snap.wealth[i] < 0.0 {
                report
                    .persistence_violations
                    .push((log.id().to_string(), t));
            }
            nonneg[i] |= snap.wealth[i] >= 0.0;
        }
        match &run.outcomes[k] {
            Some(o) => {
                auctioned.add(round.reward - o.clipped_bid);
                if round.estimate() != expected {
                    report.maximality_violations.push(t);
                }
            }
            None => {
                if round.estimate() != 0.0 || expected != f64::NEG_INFINITY {
                    report.maximality_violations.push(t);
                }
            }
        }
        let err = (total_w - total_a - auctioned.value()).abs();
        report.identity_error = report.identity_error.max(err);
    }
    if n == 0 {
        report.overestimation_excess = 0.0;
    }
    Ok(report)
}
