use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{member, Environment};
use crate::error::{Error, Result};
use crate::trace::{DecisionProblem, OptionToken, Round};

/// Menus of `size` uniform numbers; the reward is the chosen number.
#[derive(Clone, Debug)]
pub struct LoeDemo {
    size: usize,
    rng: ChaCha8Rng,
}

impl LoeDemo {
    pub fn new(size: usize, menu_seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::parameter("menu size must be ≥ 1"));
        }
        Ok(Self {
            size,
            rng: ChaCha8Rng::seed_from_u64(menu_seed),
        })
    }
}

impl Environment for LoeDemo {
    fn name(&self) -> &str {
        "loe"
    }

    fn next_problem(&mut self, _t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        let options = (1..=self.size)
            .map(|k| OptionToken::numeric(format!("m{k}"), "num", self.rng.random::<f64>()))
            .collect::<Result<Vec<_>>>()?;
        DecisionProblem::new(options)
    }

    fn resolve_reward(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        choice: &OptionToken,
        _declared: Option<&[f64]>,
    ) -> Result<f64> {
        Ok(member(t, problem, choice)?.face_value().unwrap_or(0.0))
    }

    fn benchmark(&self, _t: usize, problem: &DecisionProblem) -> Option<f64> {
        problem.max_face().map(|(_, v)| v)
    }
}
