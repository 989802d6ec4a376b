//! Decision-problem sequences behind one interface.

mod digits;
mod easy;
mod loe;
mod lottery;
mod newcomb;
mod pi;
mod product;
mod sao;

pub use digits::{DigitMode, DigitSource, SPIGOT_MAX_BITS};
pub use easy::{DecoyFaces, DecoyPayoff, DecoySpec, EasyOptions};
pub use loe::LoeDemo;
pub use lottery::{Lottery, LotteryDist};
pub use newcomb::Newcomb;
pub use pi::PiBetting;
pub use product::ProductEnvironment;
pub use sao::Sao;

use crate::error::{Error, Result};
use crate::trace::{DecisionProblem, OptionToken, Round};

pub trait Environment: Send {
    fn name(&self) -> &str;

    fn next_problem(&mut self, t: usize, history: &[Round]) -> Result<DecisionProblem>;

    /// `declared`, when present, is the agent's action distribution over
    /// `problem`'s options in order.
    fn resolve_reward(
        &mut self,
        t: usize,
        history: &[Round],
        problem: &DecisionProblem,
        choice: &OptionToken,
        declared: Option<&[f64]>,
    ) -> Result<f64>;

    /// The best reward obtainable this round in expectation, when the
    /// environment knows it. Used for reporting only.
    fn benchmark(&self, _t: usize, _problem: &DecisionProblem) -> Option<f64> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn next_problem(&mut self, t: usize, history: &[Round]) -> Result<DecisionProblem> {
        (**self).next_problem(t, history)
    }

    fn resolve_reward(
        &mut self,
        t: usize,
        history: &[Round],
        problem: &DecisionProblem,
        choice: &OptionToken,
        declared: Option<&[f64]>,
    ) -> Result<f64> {
        (**self).resolve_reward(t, history, problem, choice, declared)
    }

    fn benchmark(&self, t: usize, problem: &DecisionProblem) -> Option<f64> {
        (**self).benchmark(t, problem)
    }
}

fn member<'a>(
    t: usize,
    problem: &'a DecisionProblem,
    choice: &OptionToken,
) -> Result<&'a OptionToken> {
    problem.get(choice.id()).ok_or_else(|| Error::Membership {
        round: t,
        option: choice.id().to_string(),
    })
}

pub(crate) fn check_declared(problem: &DecisionProblem, declared: &[f64]) -> Result<()> {
    if declared.len() != problem.len() {
        return Err(Error::LengthMismatch {
            left: declared.len(),
            right: problem.len(),
        });
    }
    if declared.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::value("declared probability outside [0,1]"));
    }
    let total: f64 = declared.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::value(format!(
            "declared distribution sums to {total}"
        )));
    }
    Ok(())
}
