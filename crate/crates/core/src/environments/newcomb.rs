use super::{check_declared, member, Environment};
use crate::error::Result;
use crate::trace::{DecisionProblem, OptionToken, Round};

/// Options `a1` and `a2`. With `p` the declared probability of `a1`
/// (the indicator of the realized choice when nothing is declared),
/// `a1` pays `1/4 + p/2` and `a2` pays `1/4 + p/2 + p/4`.
#[derive(Clone, Debug, Default)]
pub struct Newcomb;

impl Newcomb {
    pub fn new() -> Self {
        Newcomb
    }

    pub fn payoff(choice_is_a1: bool, p: f64) -> f64 {
        let d1 = 0.25 + p / 2.0;
        if choice_is_a1 {
            d1
        } else {
            d1 + p / 4.0
        }
    }
}

impl Environment for Newcomb {
    fn name(&self) -> &str {
        "newcomb"
    }

    fn next_problem(&mut self, _t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        DecisionProblem::new(vec![
            OptionToken::new("a1", "a1"),
            OptionToken::new("a2", "a2"),
        ])
    }

    fn resolve_reward(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        choice: &OptionToken,
        declared: Option<&[f64]>,
    ) -> Result<f64> {
        let is_a1 = member(t, problem, choice)?.id() == "a1";
        let p = match declared {
            Some(d) => {
                check_declared(problem, d)?;
                problem.position("a1").map_or(0.0, |k| d[k])
            }
            None => f64::from(u8::from(is_a1)),
        };
        Ok(Self::payoff(is_a1, p))
    }

    fn benchmark(&self, _t: usize, _problem: &DecisionProblem) -> Option<f64> {
        Some(0.75)
    }
}
