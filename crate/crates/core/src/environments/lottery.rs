use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{member, Environment};
use crate::error::{Error, Result};
use crate::numeric::Sequence;
use crate::trace::{DecisionProblem, OptionToken, Round};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LotteryDist {
    Bernoulli,
    /// Uniform on `[μ − half_width, μ + half_width]`.
    UniformAroundMean {
        half_width: f64,
    },
}

impl LotteryDist {
    fn check(&self, mean: f64) -> Result<()> {
        if let LotteryDist::UniformAroundMean { half_width } = *self {
            if half_width < 0.0 || mean - half_width < 0.0 || mean + half_width > 1.0 {
                return Err(Error::Config(format!(
                    "uniform support [{}, {}] exceeds [0,1]",
                    mean - half_width,
                    mean + half_width
                )));
            }
        }
        Ok(())
    }
}

/// A `lottery` option paying an independent draw with mean `μ(t)`, plus an
/// optional sure option `alt` with face value `alt(t)`.
#[derive(Clone, Debug)]
pub struct Lottery {
    mean: Sequence,
    dist: LotteryDist,
    alt: Option<Sequence>,
    rng: ChaCha8Rng,
}

impl Lottery {
    pub fn new(
        mean: Sequence,
        dist: LotteryDist,
        alt: Option<Sequence>,
        seed: u64,
    ) -> Result<Self> {
        let means = match &mean {
            Sequence::Constant(v) => vec![*v],
            Sequence::Cycle(vs) => vs.clone(),
        };
        for m in means {
            dist.check(m)?;
        }
        Ok(Self {
            mean,
            dist,
            alt,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Environment for Lottery {
    fn name(&self) -> &str {
        "lottery"
    }

    fn next_problem(&mut self, t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        let mut options = vec![OptionToken::new("lottery", "lottery")];
        if let Some(alt) = &self.alt {
            options.push(OptionToken::numeric("alt", "alt", alt.at(t))?);
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
        if chosen.tag() != "lottery" {
            return Ok(chosen.face_value().unwrap_or(0.0));
        }
        let mu = self.mean.at(t);
        Ok(match self.dist {
            LotteryDist::Bernoulli => f64::from(u8::from(self.rng.random::<f64>() < mu)),
            LotteryDist::UniformAroundMean { half_width } => {
                let u: f64 = self.rng.random();
                (mu - half_width + 2.0 * half_width * u).clamp(0.0, 1.0)
            }
        })
    }

    fn benchmark(&self, t: usize, _problem: &DecisionProblem) -> Option<f64> {
        Some(
            self.alt
                .as_ref()
                .map_or(self.mean.at(t), |a| a.at(t).max(self.mean.at(t))),
        )
    }
}
