use super::{member, Environment};
use crate::error::{Error, Result};
use crate::trace::{DecisionProblem, OptionToken, Round};

/// Joint decisions over independent factor environments. Options are the
/// tuples of factor options in lexicographic order; the reward is the mean
/// of the factor rewards. Factors are queried without history.
pub struct ProductEnvironment {
    factors: Vec<Box<dyn Environment>>,
    current: Vec<DecisionProblem>,
}

impl ProductEnvironment {
    pub fn new(factors: Vec<Box<dyn Environment>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("product factors".into()));
        }
        Ok(Self {
            factors,
            current: Vec::new(),
        })
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }
}

impl Environment for ProductEnvironment {
    fn name(&self) -> &str {
        "product"
    }

    fn next_problem(&mut self, t: usize, _history: &[Round]) -> Result<DecisionProblem> {
        self.current = self
            .factors
            .iter_mut()
            .map(|f| f.next_problem(t, &[]))
            .collect::<Result<Vec<_>>>()?;
        let mut tuples: Vec<Vec<OptionToken>> = vec![Vec::new()];
        for p in &self.current {
            tuples = tuples
                .into_iter()
                .flat_map(|prefix| {
                    p.options().iter().map(move |o| {
                        let mut v = prefix.clone();
                        v.push(o.clone());
                        v
                    })
                })
                .collect();
        }
        DecisionProblem::new(tuples.into_iter().map(OptionToken::product).collect())
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
        let mut total = 0.0;
        for ((f, p), c) in self
            .factors
            .iter_mut()
            .zip(&self.current)
            .zip(chosen.factors())
        {
            total += f.resolve_reward(t, &[], p, c, None)?;
        }
        Ok(total / self.factors.len() as f64)
    }
}
