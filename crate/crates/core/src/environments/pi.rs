use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{member, DigitSource, Environment};
use crate::error::{Error, Result};
use crate::trace::{DecisionProblem, OptionToken, Round};

/// Round `t` offers `a_pi`, paying the digit for `t`, and a sure option
/// `x` whose face value is drawn uniformly from [0,1].
#[derive(Clone, Debug)]
pub struct PiBetting {
    digits: DigitSource,
    rng: ChaCha8Rng,
}

impl PiBetting {
    pub fn new(digits: DigitSource, x_seed: u64) -> Self {
        Self {
            digits,
            rng: ChaCha8Rng::seed_from_u64(x_seed),
        }
    }
}

impl Environment for PiBetting {
    fn name(&self) -> &str {
        "pi"
    }

    fn next_problem(&mut self, _t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        let x: f64 = self.rng.random();
        DecisionProblem::new(vec![
            OptionToken::new("a_pi", "a_pi"),
            OptionToken::numeric("x", "x", x)?,
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
        let chosen = member(t, problem, choice)?;
        if chosen.tag() == "a_pi" {
            Ok(f64::from(self.digits.for_round(t)?))
        } else {
            chosen.face_value().ok_or_else(|| {
                Error::Structure(format!("option `{}` has no face value", chosen.id()))
            })
        }
    }

    fn benchmark(&self, _t: usize, problem: &DecisionProblem) -> Option<f64> {
        problem.max_face().map(|(_, x)| x.max(0.5))
    }
}
