//! Selection-rule deviation statistics and betting martingales.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// What a selection rule may look at when deciding on round `t`: the
/// values strictly before `t` and the declared means up to and including `t`.
#[derive(Clone, Copy, Debug)]
pub struct RuleContext<'a> {
    pub t: usize,
    pub prior: &'a [f64],
    pub means: &'a [f64],
}

type Predicate = Arc<dyn Fn(&RuleContext<'_>) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct SelectionRule {
    id: String,
    predicate: Predicate,
}

impl fmt::Debug for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelectionRule")
            .field("id", &self.id)
            .finish()
    }
}

impl SelectionRule {
    pub fn new(
        id: impl Into<String>,
        predicate: impl Fn(&RuleContext<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            predicate: Arc::new(predicate),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn includes(&self, ctx: &RuleContext<'_>) -> bool {
        (self.predicate)(ctx)
    }

    pub fn select_all() -> Self {
        Self::new("all", |_| true)
    }

    /// Rounds with `t % 2 == parity`.
    pub fn parity(parity: usize) -> Self {
        Self::new(format!("parity{parity}"), move |c| c.t % 2 == parity % 2)
    }

    /// Rounds whose previous value exceeds `threshold`.
    pub fn previous_above(threshold: f64) -> Self {
        Self::new(format!("prev>{threshold}"), move |c| {
            c.prior.last().is_some_and(|&y| y > threshold)
        })
    }

    /// Rounds where more than half of the last `k` values exceed 1/2.
    pub fn window_majority(k: usize) -> Self {
        Self::new(format!("majority{k}"), move |c| {
            let w = &c.prior[c.prior.len().saturating_sub(k)..];
            !w.is_empty() && 2 * w.iter().filter(|&&y| y > 0.5).count() > w.len()
        })
    }

    /// Rounds in a fixed set, e.g. a hypothesis's test set from a run.
    pub fn membership(id: impl Into<String>, rounds: BTreeSet<usize>) -> Self {
        Self::new(id, move |c| rounds.contains(&c.t))
    }

    /// The bundled rule library.
    pub fn library() -> Vec<SelectionRule> {
        vec![
            Self::select_all(),
            Self::parity(0),
            Self::parity(1),
            Self::previous_above(0.5),
            Self::window_majority(5),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationPoint {
    pub t: usize,
    pub count: usize,
    pub sum: f64,
    /// `sum / count`, or 0 while nothing is selected.
    pub average: f64,
}

/// `Σ_{t ∈ S, t ≤ T} (y_t − μ_t)` for every `T`.
pub fn selection_rule_deviation(
    seq: &[f64],
    means: &[f64],
    rule: &SelectionRule,
) -> Result<Vec<DeviationPoint>> {
    if seq.len() != means.len() {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: means.len(),
        });
    }
    let mut acc = CompensatedSum::new();
    let mut count = 0;
    let mut out = Vec::with_capacity(seq.len());
    for k in 0..seq.len() {
        let t = k + 1;
        let ctx = RuleContext {
            t,
            prior: &seq[..k],
            means: &means[..=k],
        };
        if rule.includes(&ctx) {
            count += 1;
            acc.add(seq[k] - means[k]);
        }
        let sum = acc.value();
        out.push(DeviationPoint {
            t,
            count,
            sum,
            average: if count == 0 { 0.0 } else { sum / count as f64 },
        });
    }
    Ok(out)
}

/// Maps rewards to bits: 1 when `r ≥ 1/2`.
pub fn binarize(rewards: &[f64]) -> Vec<u8> {
    rewards.iter().map(|&r| u8::from(r >= 0.5)).collect()
}

type Bettor = Arc<dyn Fn(&[u8]) -> (f64, f64) + Send + Sync>;

/// A capital process defined by per-prefix multipliers for the next bit
/// being 0 or 1, together with its trajectory along `bits`.
#[derive(Clone)]
pub struct Martingale {
    initial_capital: f64,
    bettor: Bettor,
    trajectory: Vec<f64>,
}

impl fmt::Debug for Martingale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Martingale")
            .field("initial_capital", &self.initial_capital)
            .field("steps", &self.trajectory.len())
            .finish()
    }
}

impl Martingale {
    pub fn new(
        initial_capital: f64,
        bettor: impl Fn(&[u8]) -> (f64, f64) + Send + Sync + 'static,
        bits: &[u8],
    ) -> Result<Self> {
        if !(initial_capital > 0.0 && initial_capital.is_finite()) {
            return Err(Error::parameter("initial capital must be positive"));
        }
        let mut m = Self {
            initial_capital,
            bettor: Arc::new(bettor),
            trajectory: Vec::new(),
        };
        m.trajectory = (0..=bits.len()).map(|k| m.capital(&bits[..k])).collect();
        Ok(m)
    }

    pub fn initial_capital(&self) -> f64 {
        self.initial_capital
    }

    /// `d(w)` for any prefix `w`.
    pub fn capital(&self, prefix: &[u8]) -> f64 {
        let mut d = self.initial_capital;
        for k in 0..prefix.len() {
            let (m0, m1) = (self.bettor)(&prefix[..k]);
            d *= if prefix[k] == 0 { m0 } else { m1 };
        }
        d
    }

    /// Capital after 0, 1, …, n bits of the sequence it was built on.
    pub fn trajectory(&self) -> &[f64] {
        &self.trajectory
    }

    pub fn final_capital(&self) -> f64 {
        *self
            .trajectory
            .last()
            .expect("trajectory holds the initial capital")
    }
}

/// Bets the fraction `δ` of current capital on the next bit being 0 at the
/// 1-based positions in `bet_rounds`; starts with capital 1.
pub fn build_schnorr_martingale(
    bits: &[u8],
    bet_rounds: &BTreeSet<usize>,
    delta: f64,
) -> Result<Martingale> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter(format!("δ = {delta} outside (0,1)")));
    }
    let bets = bet_rounds.clone();
    Martingale::new(
        1.0,
        move |prefix| {
            if bets.contains(&(prefix.len() + 1)) {
                (1.0 + delta, 1.0 - delta)
            } else {
                (1.0, 1.0)
            }
        },
        bits,
    )
}

/// `(1 − δ²)(1 + δ)^ε`: per-two-bets capital growth when zeros exceed ones
/// by a fraction `ε` of bets.
pub fn growth_factor(delta: f64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || eps.is_nan() || eps < 0.0 {
        return Err(Error::parameter(format!(
            "growth factor needs 0 ≤ δ < 1, ε ≥ 0 (δ = {delta}, ε = {eps})"
        )));
    }
    Ok((1.0 - delta * delta) * (1.0 + delta).powf(eps))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleCheck {
    pub checked: usize,
    /// First failing prefix and the reason.
    pub failure: Option<(Vec<u8>, String)>,
}

impl MartingaleCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks `d(w) = ½ d(w0) + ½ d(w1)` (relative tolerance 1e-12) and
/// `d ≥ 0` at every sampled prefix.
pub fn martingale_check(m: &Martingale, prefixes: &[Vec<u8>]) -> MartingaleCheck {
    for (k, w) in prefixes.iter().enumerate() {
        let d = m.capital(w);
        let mut w0 = w.clone();
        w0.push(0);
        let mut w1 = w.clone();
        w1.push(1);
        let (d0, d1) = (m.capital(&w0), m.capital(&w1));
        let reason = if d < 0.0 || d0 < 0.0 || d1 < 0.0 {
            Some(format!("negative capital ({d}, {d0}, {d1})"))
        } else if (d - 0.5 * (d0 + d1)).abs() > 1e-12 * d.abs().max(1.0) {
            Some(format!(
                "d(w) = {d} but (d(w0) + d(w1))/2 = {}",
                0.5 * (d0 + d1)
            ))
        } else {
            None
        };
        if let Some(r) = reason {
            return MartingaleCheck {
                checked: k + 1,
                failure: Some((w.clone(), r)),
            };
        }
    }
    MartingaleCheck {
        checked: prefixes.len(),
        failure: None,
    }
}
