use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{member, Environment};
use crate::error::{unit_interval, Error, Result};
use crate::numeric::Sequence;
use crate::trace::{DecisionProblem, OptionToken, Round};

#[derive(Clone, Debug, PartialEq)]
pub enum DecoyFaces {
    Fixed(Vec<f64>),
    /// `count` faces drawn uniformly from `[lo, hi]` each round.
    Uniform {
        count: usize,
        lo: f64,
        hi: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoyPayoff {
    FaceValue,
    Zero,
}

impl DecoyPayoff {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "face" | "face_value" => Ok(DecoyPayoff::FaceValue),
            "zero" => Ok(DecoyPayoff::Zero),
            _ => Err(Error::Config(format!("unknown decoy payoff `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoySpec {
    pub faces: DecoyFaces,
    pub payoff: DecoyPayoff,
}

impl Default for DecoySpec {
    fn default() -> Self {
        Self {
            faces: DecoyFaces::Uniform {
                count: 2,
                lo: 0.0,
                hi: 1.0,
            },
            payoff: DecoyPayoff::FaceValue,
        }
    }
}

/// A guaranteed option `g` (tag `guaranteed`) paying `l(t)` next to decoys
/// `d1, d2, …` (tag `decoy`). With `bonus`, the guaranteed option pays
/// `max(l(t), best decoy payout)` instead.
#[derive(Clone, Debug)]
pub struct EasyOptions {
    floor: Sequence,
    decoys: DecoySpec,
    label_guaranteed: bool,
    bonus: bool,
    rng: ChaCha8Rng,
}

impl EasyOptions {
    pub fn new(floor: Sequence, decoys: DecoySpec, seed: u64) -> Result<Self> {
        match &decoys.faces {
            DecoyFaces::Fixed(v) => {
                for &x in v {
                    unit_interval("decoy face", x)?;
                }
            }
            DecoyFaces::Uniform { lo, hi, .. } => {
                unit_interval("decoy lower bound", *lo)?;
                unit_interval("decoy upper bound", *hi)?;
                if lo > hi {
                    return Err(Error::parameter("decoy range is empty"));
                }
            }
        }
        Ok(Self {
            floor,
            decoys,
            label_guaranteed: false,
            bonus: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Shows `l(t)` as the guaranteed option's face value.
    pub fn labeled(mut self, yes: bool) -> Self {
        self.label_guaranteed = yes;
        self
    }

    pub fn with_bonus(mut self, yes: bool) -> Self {
        self.bonus = yes;
        self
    }

    fn decoy_pay(&self, o: &OptionToken) -> f64 {
        match self.decoys.payoff {
            DecoyPayoff::FaceValue => o.face_value().unwrap_or(0.0),
            DecoyPayoff::Zero => 0.0,
        }
    }
}

impl Environment for EasyOptions {
    fn name(&self) -> &str {
        "easy"
    }

    fn next_problem(&mut self, t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        let l = self.floor.at(t);
        let g = if self.label_guaranteed {
            OptionToken::numeric("g", "guaranteed", l)?
        } else {
            OptionToken::new("g", "guaranteed")
        };
        let faces: Vec<f64> = match &self.decoys.faces {
            DecoyFaces::Fixed(v) => v.clone(),
            DecoyFaces::Uniform { count, lo, hi } => (0..*count)
                .map(|_| self.rng.random_range(*lo..=*hi))
                .collect(),
        };
        let mut options = vec![g];
        for (k, x) in faces.into_iter().enumerate() {
            options.push(OptionToken::numeric(format!("d{}", k + 1), "decoy", x)?);
        }
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
        let chosen = member(t, problem, choice)?;
        if chosen.tag() == "guaranteed" {
            let l = self.floor.at(t);
            if self.bonus {
                let best = problem
                    .options()
                    .iter()
                    .filter(|o| o.tag() == "decoy")
                    .map(|o| self.decoy_pay(o))
                    .fold(0.0, f64::max);
                Ok(l.max(best))
            } else {
                Ok(l)
            }
        } else {
            Ok(self.decoy_pay(chosen))
        }
    }

    fn benchmark(&self, t: usize, _problem: &DecisionProblem) -> Option<f64> {
        Some(self.floor.at(t))
    }
}
