use super::{member, Environment};
use crate::error::Result;
use crate::trace::{DecisionProblem, OptionToken, Round};

/// Two options every round: `a0` pays 1/2, `a1` pays 0.
#[derive(Clone, Debug, Default)]
pub struct Sao;

impl Sao {
    pub fn new() -> Self {
        Sao
    }
}

impl Environment for Sao {
    fn name(&self) -> &str {
        "sao"
    }

    fn next_problem(&mut self, _t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        DecisionProblem::new(vec![
            OptionToken::numeric("a0", "a0", 0.5)?,
            OptionToken::new("a1", "a1"),
        ])
    }

    fn resolve_reward(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        choice: &OptionToken,
        _declared: Option<&[f64]>,
    ) -> Result<f64> {
        Ok(if member(t, problem, choice)?.id() == "a0" {
            0.5
        } else {
            0.0
        })
    }

    fn benchmark(&self, _t: usize, _problem: &DecisionProblem) -> Option<f64> {
        Some(0.5)
    }
}
