//! The agent interface, simple scripted agents and the generic run loop.

use crate::environments::Environment;
use crate::error::{unit_interval, Error, Result};
use crate::hypotheses::Hypothesis;
use crate::trace::{AgentStep, DecisionProblem, Round, Trace};

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub step: AgentStep,
    /// Registry positions whose recommendation the agent follows as a test.
    pub tested: Vec<usize>,
    /// Per-option action distribution aligned with the problem's options.
    pub declared: Option<Vec<f64>>,
}

impl Decision {
    pub fn deterministic(step: AgentStep, tested: Vec<usize>) -> Self {
        Self {
            step,
            tested,
            declared: None,
        }
    }
}

pub trait Agent {
    /// `advice` holds one output per registered hypothesis, in order.
    fn decide(
        &mut self,
        t: usize,
        history: &[Round],
        problem: &DecisionProblem,
        advice: &[AgentStep],
    ) -> Result<Decision>;

    fn observe(&mut self, _t: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FixedPolicy {
    First,
    Tag(String),
}

impl FixedPolicy {
    /// `first` or `tag:<tag>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(FixedPolicy::First),
            _ => s
                .strip_prefix("tag:")
                .map(|t| FixedPolicy::Tag(t.to_string()))
                .ok_or_else(|| Error::parameter(format!("unknown fixed policy `{s}`"))),
        }
    }
}

/// A computable agent that ignores history and advice.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedAgent {
    policy: FixedPolicy,
    estimate: f64,
}

impl FixedAgent {
    pub fn new(policy: FixedPolicy, estimate: f64) -> Result<Self> {
        unit_interval("estimate", estimate)?;
        Ok(Self { policy, estimate })
    }

    pub fn step(
        &self,
        _t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
    ) -> Result<AgentStep> {
        let choice = match &self.policy {
            FixedPolicy::First => problem.first(),
            FixedPolicy::Tag(tag) => problem.find_tag(tag).unwrap_or_else(|| problem.first()),
        };
        AgentStep::new(choice.clone(), self.estimate)
    }
}

impl Agent for FixedAgent {
    fn decide(
        &mut self,
        t: usize,
        history: &[Round],
        problem: &DecisionProblem,
        advice: &[AgentStep],
    ) -> Result<Decision> {
        let step = self.step(t, history, problem)?;
        let tested = followed(&step, advice);
        Ok(Decision::deterministic(step, tested))
    }
}

fn followed(step: &AgentStep, advice: &[AgentStep]) -> Vec<usize> {
    advice
        .iter()
        .enumerate()
        .filter(|(_, a)| a.choice().id() == step.choice().id())
        .map(|(i, _)| i)
        .collect()
}

/// Estimate-free "law of effect" learner over two policies on numeric
/// menus: the max policy, and a policy taking the smallest option above
/// 1/2 (or the max when there is none). Every `test_every`-th round is a
/// test round where the max policy is tried only on menus whose max is at
/// most 1/2; other rounds follow the policy with the better test average.
#[derive(Clone, Debug)]
pub struct BiasedTester {
    test_every: usize,
    totals: [f64; 2],
    counts: [usize; 2],
    last: Option<usize>,
}

impl BiasedTester {
    pub fn new(test_every: usize) -> Result<Self> {
        if test_every == 0 {
            return Err(Error::parameter("test_every must be ≥ 1"));
        }
        Ok(Self {
            test_every,
            totals: [0.0; 2],
            counts: [0; 2],
            last: None,
        })
    }

    fn average(&self, k: usize) -> f64 {
        if self.counts[k] == 0 {
            0.0
        } else {
            self.totals[k] / self.counts[k] as f64
        }
    }
}

fn faces(problem: &DecisionProblem) -> Result<Vec<f64>> {
    problem
        .options()
        .iter()
        .map(|o| {
            o.face_value()
                .ok_or_else(|| Error::Structure(format!("option `{}` has no face value", o.id())))
        })
        .collect()
}

impl Agent for BiasedTester {
    fn decide(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        advice: &[AgentStep],
    ) -> Result<Decision> {
        let v = faces(problem)?;
        let argmax = (0..v.len()).fold(0, |b, k| if v[k] > v[b] { k } else { b });
        let above: Option<usize> =
            (0..v.len())
                .filter(|&k| v[k] > 0.5)
                .fold(None, |b, k| match b {
                    Some(j) if v[j] <= v[k] => Some(j),
                    _ => Some(k),
                });
        let pick = |policy: usize| {
            if policy == 0 {
                argmax
            } else {
                above.unwrap_or(argmax)
            }
        };
        let test_round = (t - 1).is_multiple_of(self.test_every);
        let policy = if test_round {
            usize::from(v[argmax] > 0.5)
        } else {
            usize::from(self.average(0) < self.average(1))
        };
        self.last = test_round.then_some(policy);
        let estimate = self.average(policy).clamp(0.0, 1.0);
        let step = AgentStep::new(problem.options()[pick(policy)].clone(), estimate)?;
        let tested = if test_round {
            followed(&step, advice)
        } else {
            Vec::new()
        };
        Ok(Decision::deterministic(step, tested))
    }

    fn observe(&mut self, _t: usize, reward: f64) -> Result<()> {
        if let Some(k) = self.last.take() {
            self.totals[k] += reward;
            self.counts[k] += 1;
        }
        Ok(())
    }
}

/// Runs `agent` for `horizon` rounds, querying every hypothesis each round.
pub fn run_agent(
    env: &mut dyn Environment,
    registry: &[Hypothesis],
    agent: &mut dyn Agent,
    horizon: usize,
) -> Result<Trace> {
    if horizon == 0 {
        return Err(Error::parameter("horizon must be ≥ 1"));
    }
    let mut trace = Trace::new(registry.iter().map(|h| h.id().to_string()))?;
    for t in 1..=horizon {
        let wrap = |e: Error| Error::Environment {
            round: t,
            source: Box::new(e),
        };
        let problem = env.next_problem(t, trace.rounds()).map_err(wrap)?;
        let advice = registry
            .iter()
            .map(|h| h.advise(t, trace.rounds(), &problem))
            .collect::<Result<Vec<_>>>()?;
        let decision = agent.decide(t, trace.rounds(), &problem, &advice)?;
        if !problem.contains(decision.step.choice()) {
            return Err(Error::Membership {
                round: t,
                option: decision.step.choice().id().to_string(),
            });
        }
        let reward = env
            .resolve_reward(
                t,
                trace.rounds(),
                &problem,
                decision.step.choice(),
                decision.declared.as_deref(),
            )
            .map_err(wrap)?;
        agent.observe(t, reward)?;
        trace.push(problem, decision.step, reward, advice, &decision.tested)?;
    }
    Ok(trace)
}
