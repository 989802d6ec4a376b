//! Options, decision problems, agent steps and run traces.
//!
//! Rounds are numbered from 1 everywhere in the public API.

use std::collections::{BTreeSet, HashSet};

use crate::error::{unit_interval, Error, Result};

/// Set of 1-based round indices.
pub type RoundSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq)]
pub struct OptionToken {
    id: String,
    face_value: Option<f64>,
    tag: String,
    factors: Vec<OptionToken>,
}

impl OptionToken {
    pub fn new(id: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            face_value: None,
            tag: tag.into(),
            factors: Vec::new(),
        }
    }

    pub fn numeric(id: impl Into<String>, tag: impl Into<String>, face_value: f64) -> Result<Self> {
        unit_interval("face value", face_value)?;
        Ok(Self {
            face_value: Some(face_value),
            ..Self::new(id, tag)
        })
    }

    /// A tuple option whose id and tag join the components with `|`.
    pub fn product(factors: Vec<OptionToken>) -> Self {
        let id = factors
            .iter()
            .map(|f| f.id.as_str())
            .collect::<Vec<_>>()
            .join("|");
        let tag = factors
            .iter()
            .map(|f| f.tag.as_str())
            .collect::<Vec<_>>()
            .join("|");
        Self {
            id,
            face_value: None,
            tag,
            factors,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn face_value(&self) -> Option<f64> {
        self.face_value
    }

    pub fn factors(&self) -> &[OptionToken] {
        &self.factors
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionProblem {
    options: Vec<OptionToken>,
}

impl DecisionProblem {
    pub fn new(options: Vec<OptionToken>) -> Result<Self> {
        if options.is_empty() {
            return Err(Error::Empty("decision problem".into()));
        }
        let mut seen = HashSet::new();
        for o in &options {
            if !seen.insert(o.id.as_str()) {
                return Err(Error::value(format!("duplicate option id `{}`", o.id)));
            }
        }
        Ok(Self { options })
    }

    pub fn options(&self) -> &[OptionToken] {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &OptionToken {
        &self.options[0]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.options.iter().position(|o| o.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&OptionToken> {
        self.options.iter().find(|o| o.id == id)
    }

    pub fn contains(&self, option: &OptionToken) -> bool {
        self.position(&option.id).is_some()
    }

    pub fn find_tag(&self, tag: &str) -> Option<&OptionToken> {
        self.options.iter().find(|o| o.tag == tag)
    }

    /// First option carrying the largest face value.
    pub fn max_face(&self) -> Option<(&OptionToken, f64)> {
        let mut best: Option<(&OptionToken, f64)> = None;
        for o in &self.options {
            if let Some(v) = o.face_value {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((o, v));
                }
            }
        }
        best
    }
}

/// A (choice, estimate) pair. Hypotheses emit the same shape as
/// (recommendation, promise).
#[derive(Clone, Debug, PartialEq)]
pub struct AgentStep {
    choice: OptionToken,
    estimate: f64,
}

impl AgentStep {
    pub fn new(choice: OptionToken, estimate: f64) -> Result<Self> {
        unit_interval("estimate", estimate)?;
        Ok(Self { choice, estimate })
    }

    pub fn choice(&self) -> &OptionToken {
        &self.choice
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub problem: DecisionProblem,
    pub step: AgentStep,
    pub reward: f64,
}

impl Round {
    pub fn estimate(&self) -> f64 {
        self.step.estimate
    }

    pub fn choice(&self) -> &OptionToken {
        &self.step.choice
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisLog {
    id: String,
    outputs: Vec<AgentStep>,
    tested: RoundSet,
}

impl HypothesisLog {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn outputs(&self) -> &[AgentStep] {
        &self.outputs
    }

    /// Output at 1-based round `t`.
    pub fn at(&self, t: usize) -> &AgentStep {
        &self.outputs[t - 1]
    }

    pub fn tested(&self) -> &RoundSet {
        &self.tested
    }

    pub fn promise(&self, t: usize) -> f64 {
        self.outputs[t - 1].estimate
    }
}

/// A complete run history. Every test-membership entry is validated when
/// it is recorded, so a `Trace` value is always consistent.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    rounds: Vec<Round>,
    logs: Vec<HypothesisLog>,
}

impl Trace {
    pub fn new<S: Into<String>>(hypothesis_ids: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut logs = Vec::new();
        let mut seen = HashSet::new();
        for id in hypothesis_ids {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(Error::value(format!("duplicate hypothesis id `{id}`")));
            }
            logs.push(HypothesisLog {
                id,
                outputs: Vec::new(),
                tested: RoundSet::new(),
            });
        }
        Ok(Self {
            rounds: Vec::new(),
            logs,
        })
    }

    /// Appends round `len() + 1`. `advice` holds one output per registered
    /// hypothesis, in registry order; `tested` lists registry positions.
    pub fn push(
        &mut self,
        problem: DecisionProblem,
        step: AgentStep,
        reward: f64,
        advice: Vec<AgentStep>,
        tested: &[usize],
    ) -> Result<()> {
        let t = self.rounds.len() + 1;
        if !problem.contains(&step.choice) {
            return Err(Error::Membership {
                round: t,
                option: step.choice.id.clone(),
            });
        }
        unit_interval("reward", reward)?;
        if advice.len() != self.logs.len() {
            return Err(Error::LengthMismatch {
                left: advice.len(),
                right: self.logs.len(),
            });
        }
        for a in &advice {
            if !problem.contains(&a.choice) {
                return Err(Error::Membership {
                    round: t,
                    option: a.choice.id.clone(),
                });
            }
        }
        for &i in tested {
            let log = self
                .logs
                .get(i)
                .ok_or_else(|| Error::value(format!("tested position {i} out of range")))?;
            if advice[i].choice.id != step.choice.id {
                return Err(Error::InvalidTestSet {
                    hypothesis: log.id.clone(),
                    round: t,
                    choice: step.choice.id.clone(),
                    recommendation: advice[i].choice.id.clone(),
                });
            }
        }
        for (log, a) in self.logs.iter_mut().zip(advice) {
            log.outputs.push(a);
        }
        for &i in tested {
            self.logs[i].tested.insert(t);
        }
        self.rounds.push(Round {
            problem,
            step,
            reward,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// Round at 1-based index `t`.
    pub fn round(&self, t: usize) -> Result<&Round> {
        if t == 0 || t > self.rounds.len() {
            return Err(Error::Range {
                t,
                len: self.rounds.len(),
            });
        }
        Ok(&self.rounds[t - 1])
    }

    pub fn hypothesis_ids(&self) -> impl Iterator<Item = &str> {
        self.logs.iter().map(|l| l.id.as_str())
    }

    pub fn logs(&self) -> &[HypothesisLog] {
        &self.logs
    }

    pub fn log(&self, id: &str) -> Result<&HypothesisLog> {
        self.logs
            .iter()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::UnknownHypothesis(id.to_string()))
    }

    /// Rebuilds a trace from parts, re-checking every invariant.
    pub fn from_parts(
        rounds: Vec<Round>,
        logs: Vec<(String, Vec<AgentStep>, RoundSet)>,
    ) -> Result<Self> {
        let mut trace = Trace::new(logs.iter().map(|(id, _, _)| id.clone()))?;
        for (id, outputs, tested) in &logs {
            if outputs.len() != rounds.len() {
                return Err(Error::Structure(format!(
                    "hypothesis `{id}` has {} outputs for {} rounds",
                    outputs.len(),
                    rounds.len()
                )));
            }
            if let Some(&t) = tested.iter().find(|&&t| t == 0 || t > rounds.len()) {
                return Err(Error::Range {
                    t,
                    len: rounds.len(),
                });
            }
        }
        for (k, round) in rounds.into_iter().enumerate() {
            let t = k + 1;
            let advice = logs.iter().map(|(_, o, _)| o[k].clone()).collect();
            let tested: Vec<usize> = logs
                .iter()
                .enumerate()
                .filter(|(_, (_, _, m))| m.contains(&t))
                .map(|(i, _)| i)
                .collect();
            trace.push(round.problem, round.step, round.reward, advice, &tested)?;
        }
        Ok(trace)
    }
}
