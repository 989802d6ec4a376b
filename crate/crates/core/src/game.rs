//! Two-player games: payoff tables, pure maximin, individual rationality,
//! the scripted folk construction and match play.

use std::cell::RefCell;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{Agent, Decision};
use crate::error::{unit_interval, Error, Result};
use crate::hypotheses::Hypothesis;
use crate::trace::{AgentStep, DecisionProblem, OptionToken, Round, Trace};

/// Player 1 picks rows, player 2 picks columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    rows: Vec<String>,
    cols: Vec<String>,
    u1: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
}

impl Game {
    /// `payoffs[r][c] = (u1, u2)`.
    pub fn new(
        rows: Vec<String>,
        cols: Vec<String>,
        payoffs: Vec<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Empty("strategy set".into()));
        }
        for labels in [&rows, &cols] {
            for (k, l) in labels.iter().enumerate() {
                if labels[..k].contains(l) {
                    return Err(Error::value(format!("duplicate strategy label `{l}`")));
                }
            }
        }
        if payoffs.len() != rows.len() || payoffs.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::Structure(
                "payoff table shape does not match labels".into(),
            ));
        }
        let mut u1 = Vec::new();
        let mut u2 = Vec::new();
        for row in &payoffs {
            for &(a, b) in row {
                unit_interval("payoff", a)?;
                unit_interval("payoff", b)?;
            }
            u1.push(row.iter().map(|p| p.0).collect());
            u2.push(row.iter().map(|p| p.1).collect());
        }
        Ok(Self { rows, cols, u1, u2 })
    }

    /// The Prisoner's Dilemma with payoffs CC 0.3/0.3, CD 0.1/0.4,
    /// DC 0.4/0.1, DD 0.2/0.2.
    pub fn prisoners_dilemma() -> Self {
        let labels = vec!["Cooperate".to_string(), "Defect".to_string()];
        Game::new(
            labels.clone(),
            labels,
            vec![vec![(0.3, 0.3), (0.1, 0.4)], vec![(0.4, 0.1), (0.2, 0.2)]],
        )
        .expect("valid table")
    }

    /// Text format: the first non-comment line lists column labels, each
    /// following line is a row label and one `u1,u2` cell per column.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cols: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        let mut payoffs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let Some(cols) = &cols else {
                cols = Some(words.iter().map(|w| w.to_string()).collect());
                continue;
            };
            if words.len() != cols.len() + 1 {
                return Err(Error::parse(
                    line,
                    format!(
                        "row `{}` has {} cells, expected {}",
                        words[0],
                        words.len() - 1,
                        cols.len()
                    ),
                ));
            }
            let mut row = Vec::new();
            for (c, cell) in words[1..].iter().enumerate() {
                let bad = |why: &str| {
                    Error::parse(line, format!("column {}: cell `{cell}` {why}", c + 1))
                };
                let (a, b) = cell.split_once(',').ok_or_else(|| bad("is not `u1,u2`"))?;
                let a: f64 = a.parse().map_err(|_| bad("has a non-numeric payoff"))?;
                let b: f64 = b.parse().map_err(|_| bad("has a non-numeric payoff"))?;
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                    return Err(bad("has a payoff outside [0,1]"));
                }
                row.push((a, b));
            }
            rows.push(words[0].to_string());
            payoffs.push(row);
        }
        let cols = cols.ok_or_else(|| Error::parse(1, "missing column labels"))?;
        if rows.is_empty() {
            return Err(Error::parse(text.lines().count().max(1), "no payoff rows"));
        }
        Game::new(rows, cols, payoffs).map_err(|e| Error::parse(0, e.to_string()))
    }

    pub fn strategies(&self, player: usize) -> &[String] {
        if player == 1 {
            &self.rows
        } else {
            &self.cols
        }
    }

    /// Player `player`'s payoff at row `a1`, column `a2`.
    pub fn payoff(&self, player: usize, a1: usize, a2: usize) -> f64 {
        if player == 1 {
            self.u1[a1][a2]
        } else {
            self.u2[a1][a2]
        }
    }

    /// Own payoff with own strategy `own` against opponent strategy `opp`.
    fn own_payoff(&self, player: usize, own: usize, opp: usize) -> f64 {
        if player == 1 {
            self.u1[own][opp]
        } else {
            self.u2[opp][own]
        }
    }

    /// Options are the player's strategy labels, tagged in lowercase.
    pub fn problem(&self, player: usize) -> DecisionProblem {
        DecisionProblem::new(
            self.strategies(player)
                .iter()
                .map(|l| OptionToken::new(l.clone(), l.to_lowercase()))
                .collect(),
        )
        .expect("labels are distinct")
    }

    /// Opponent strategy minimizing `player`'s payoff given own strategy,
    /// lowest index on ties.
    pub fn punisher(&self, player: usize, own: usize) -> usize {
        let n = self.strategies(3 - player).len();
        (0..n).fold(0, |b, k| {
            if self.own_payoff(player, own, k) < self.own_payoff(player, own, b) {
                k
            } else {
                b
            }
        })
    }
}

fn check_player(player: usize) -> Result<()> {
    if player == 1 || player == 2 {
        Ok(())
    } else {
        Err(Error::parameter(format!(
            "player must be 1 or 2, got {player}"
        )))
    }
}

/// `max_own min_opp u(own, opp)` with the achieving strategy (lowest index
/// on ties).
pub fn pure_maximin(game: &Game, player: usize) -> Result<(f64, usize)> {
    check_player(player)?;
    let mut best: Option<(f64, usize)> = None;
    for own in 0..game.strategies(player).len() {
        let worst = game.own_payoff(player, own, game.punisher(player, own));
        if best.is_none_or(|(b, _)| worst > b) {
            best = Some((worst, own));
        }
    }
    Ok(best.expect("nonempty strategy set"))
}

/// A distribution over strategy pairs, `weights[row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedProfile {
    weights: Vec<Vec<f64>>,
}

impl CorrelatedProfile {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let total: f64 = weights.iter().flatten().sum();
        if weights.is_empty()
            || weights.iter().flatten().any(|&w| w.is_nan() || w < 0.0)
            || (total - 1.0).abs() > 1e-12
        {
            return Err(Error::value(format!(
                "profile weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        Ok(Self { weights })
    }

    pub fn pure(game: &Game, a1: usize, a2: usize) -> Self {
        let mut w = vec![vec![0.0; game.strategies(2).len()]; game.strategies(1).len()];
        w[a1][a2] = 1.0;
        Self { weights: w }
    }

    pub fn weight(&self, a1: usize, a2: usize) -> f64 {
        self.weights[a1][a2]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn expected_payoff(&self, game: &Game, player: usize) -> f64 {
        let mut total = 0.0;
        for (r, row) in self.weights.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                total += w * game.payoff(player, r, c);
            }
        }
        total
    }

    pub fn total_variation(&self, other: &CorrelatedProfile) -> Result<f64> {
        if self.weights.len() != other.weights.len()
            || self
                .weights
                .iter()
                .zip(&other.weights)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Structure("profiles over different games".into()));
        }
        let diff: f64 = self
            .weights
            .iter()
            .flatten()
            .zip(other.weights.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(diff / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalityReport {
    pub rational: bool,
    /// `u_i(profile) − maximin_i` for each player.
    pub margins: (f64, f64),
}

pub fn is_strictly_individually_rational(
    game: &Game,
    profile: &CorrelatedProfile,
) -> RationalityReport {
    let margin = |p: usize| {
        profile.expected_payoff(game, p) - pure_maximin(game, p).expect("valid player").0
    };
    let margins = (margin(1), margin(2));
    RationalityReport {
        rational: margins.0 > 0.0 && margins.1 > 0.0,
        margins,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FolkConfig {
    pub p_c: f64,
    /// Punishment-test probabilities, player 1's strategies then player
    /// 2's. `None` splits `1 − p_c` evenly.
    pub p_punish: Option<Vec<f64>>,
    /// Constant estimates; `None` takes the midpoint of the feasible range.
    pub v: Option<(f64, f64)>,
    pub cycle_denominator: u32,
    pub seed: u64,
}

impl Default for FolkConfig {
    fn default() -> Self {
        Self {
            p_c: 0.9,
            p_punish: None,
            v: None,
            cycle_denominator: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Joint strategy from the cooperative cycle.
    Cooperative(usize, usize),
    /// `player` plays `strategy`; the opponent punishes.
    Punish { player: usize, strategy: usize },
}

/// A validated folk construction.
#[derive(Clone, Debug)]
pub struct FolkPlan {
    pub game: Game,
    pub p_c: f64,
    /// `(player, strategy, probability)`.
    pub punish: Vec<(usize, usize, f64)>,
    pub v: (f64, f64),
    pub cycle: Vec<(usize, usize)>,
    pub seed: u64,
}

impl FolkPlan {
    pub fn new(game: &Game, profile: &CorrelatedProfile, config: &FolkConfig) -> Result<Self> {
        let n1 = game.strategies(1).len();
        let n2 = game.strategies(2).len();
        if profile.weights.len() != n1 || profile.weights.iter().any(|r| r.len() != n2) {
            return Err(Error::Structure("profile does not match the game".into()));
        }
        if !(config.p_c > 0.0 && config.p_c < 1.0) {
            return Err(Error::parameter(format!(
                "p_c = {} outside (0,1)",
                config.p_c
            )));
        }
        if config.cycle_denominator == 0 {
            return Err(Error::parameter("cycle denominator must be positive"));
        }
        let slots: Vec<(usize, usize)> = (0..n1)
            .map(|a| (1, a))
            .chain((0..n2).map(|a| (2, a)))
            .collect();
        let probs = match &config.p_punish {
            Some(p) => p.clone(),
            None => vec![(1.0 - config.p_c) / slots.len() as f64; slots.len()],
        };
        if probs.len() != slots.len() {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: slots.len(),
            });
        }
        if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::parameter(
                "punishment probabilities must lie in (0,1)",
            ));
        }
        let total = config.p_c + probs.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::parameter(format!(
                "phase probabilities sum to {total}, not 1"
            )));
        }

        let cycle = realize_cycle(profile, config.cycle_denominator);
        let c_prime = cycle_profile(&cycle, n1, n2);
        let mut bounds = [(0.0, 0.0); 2];
        for (k, player) in [1usize, 2].into_iter().enumerate() {
            let (maximin, _) = pure_maximin(game, player)?;
            let upper = config.p_c * c_prime.expected_payoff(game, player);
            if upper <= maximin {
                return Err(Error::Infeasible(format!(
                    "player {player}: p_c·u(c) = {upper} is not above maximin {maximin}"
                )));
            }
            bounds[k] = (maximin, upper);
        }
        let v = match config.v {
            Some(v) => {
                for (k, x) in [v.0, v.1].into_iter().enumerate() {
                    let (lo, hi) = bounds[k];
                    if !(lo < x && x < hi) {
                        return Err(Error::Infeasible(format!(
                            "player {}: need maximin {lo} < v = {x} < p_c·u(c) = {hi}",
                            k + 1
                        )));
                    }
                }
                v
            }
            None => (
                (bounds[0].0 + bounds[0].1) / 2.0,
                (bounds[1].0 + bounds[1].1) / 2.0,
            ),
        };
        Ok(Self {
            game: game.clone(),
            p_c: config.p_c,
            punish: slots
                .into_iter()
                .zip(probs)
                .map(|((p, a), q)| (p, a, q))
                .collect(),
            v,
            cycle,
            seed: config.seed,
        })
    }

    /// Joint play in a punishment-test phase.
    pub fn punish_profile(&self, player: usize, strategy: usize) -> (usize, usize) {
        let opp = self.game.punisher(player, strategy);
        if player == 1 {
            (strategy, opp)
        } else {
            (opp, strategy)
        }
    }

    /// The phase mixture: `p_c·c′ + Σ p_{i,a}·δ(punishment profile)`.
    pub fn target(&self) -> CorrelatedProfile {
        let n1 = self.game.strategies(1).len();
        let n2 = self.game.strategies(2).len();
        let mut w = cycle_profile(&self.cycle, n1, n2).weights;
        for row in &mut w {
            for x in row.iter_mut() {
                *x *= self.p_c;
            }
        }
        for &(p, a, q) in &self.punish {
            let (r, c) = self.punish_profile(p, a);
            w[r][c] += q;
        }
        CorrelatedProfile { weights: w }
    }
}

/// Rounds the profile to multiples of `1/d` (largest remainders) and lists
/// each joint strategy that many times in row-major order.
fn realize_cycle(profile: &CorrelatedProfile, d: u32) -> Vec<(usize, usize)> {
    let mut cells: Vec<((usize, usize), u64, f64)> = Vec::new();
    for (r, row) in profile.weights.iter().enumerate() {
        for (c, &w) in row.iter().enumerate() {
            let x = w * f64::from(d);
            cells.push(((r, c), x.floor() as u64, x - x.floor()));
        }
    }
    let assigned: u64 = cells.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| cells[b].2.total_cmp(&cells[a].2).then(a.cmp(&b)));
    for &k in order
        .iter()
        .take(u64::from(d).saturating_sub(assigned) as usize)
    {
        cells[k].1 += 1;
    }
    cells
        .into_iter()
        .flat_map(|(rc, n, _)| std::iter::repeat_n(rc, n as usize))
        .collect()
}

fn cycle_profile(cycle: &[(usize, usize)], n1: usize, n2: usize) -> CorrelatedProfile {
    let mut w = vec![vec![0.0; n2]; n1];
    for &(r, c) in cycle {
        w[r][c] += 1.0 / cycle.len() as f64;
    }
    CorrelatedProfile { weights: w }
}

/// Shared randomizer driving both folk agents.
#[derive(Debug)]
struct Director {
    plan: FolkPlan,
    rng: ChaCha8Rng,
    cursor: usize,
    phases: Vec<Phase>,
}

impl Director {
    fn phase(&mut self, t: usize) -> Phase {
        while self.phases.len() < t {
            let u: f64 = self.rng.random();
            let phase = if u < self.plan.p_c {
                let (r, c) = self.plan.cycle[self.cursor % self.plan.cycle.len()];
                self.cursor += 1;
                Phase::Cooperative(r, c)
            } else {
                let mut acc = self.plan.p_c;
                let mut pick = *self.plan.punish.last().expect("punishment slots");
                for &slot in &self.plan.punish {
                    acc += slot.2;
                    if u < acc {
                        pick = slot;
                        break;
                    }
                }
                Phase::Punish {
                    player: pick.0,
                    strategy: pick.1,
                }
            };
            self.phases.push(phase);
        }
        self.phases[t - 1]
    }
}

/// One of the two coupled scripted agents returned by [`folk_agents`].
#[derive(Debug)]
pub struct FolkAgent {
    player: usize,
    director: Rc<RefCell<Director>>,
}

impl FolkAgent {
    pub fn player(&self) -> usize {
        self.player
    }

    pub fn estimate(&self) -> f64 {
        let v = self.director.borrow().plan.v;
        if self.player == 1 {
            v.0
        } else {
            v.1
        }
    }

    /// Phases drawn so far, round 1 first.
    pub fn phases(&self) -> Vec<Phase> {
        self.director.borrow().phases.clone()
    }

    pub fn plan(&self) -> FolkPlan {
        self.director.borrow().plan.clone()
    }
}

impl Agent for FolkAgent {
    fn decide(
        &mut self,
        t: usize,
        _history: &[Round],
        problem: &DecisionProblem,
        advice: &[AgentStep],
    ) -> Result<Decision> {
        let phase = self.director.borrow_mut().phase(t);
        let v = self.estimate();
        let director = self.director.borrow();
        let game = &director.plan.game;
        let (own, tests) = match phase {
            Phase::Cooperative(r, c) => (if self.player == 1 { r } else { c }, false),
            Phase::Punish { player, strategy } if player == self.player => (strategy, true),
            Phase::Punish { player, strategy } => (game.punisher(player, strategy), false),
        };
        let label = &game.strategies(self.player)[own];
        let choice = problem.get(label).ok_or_else(|| Error::Membership {
            round: t,
            option: label.clone(),
        })?;
        let tested = if tests {
            advice
                .iter()
                .enumerate()
                .filter(|(_, a)| a.estimate() > v && a.choice().id() == label.as_str())
                .map(|(k, _)| k)
                .collect()
        } else {
            Vec::new()
        };
        Ok(Decision::deterministic(
            AgentStep::new(choice.clone(), v)?,
            tested,
        ))
    }
}

/// Builds the two scripted agents of the folk construction, sharing one
/// seeded randomizer.
pub fn folk_agents(
    game: &Game,
    profile: &CorrelatedProfile,
    config: &FolkConfig,
) -> Result<(FolkAgent, FolkAgent)> {
    let report = is_strictly_individually_rational(game, profile);
    if !report.rational {
        return Err(Error::Infeasible(format!(
            "profile is not strictly individually rational (payoff minus pure maximin: {}, {})",
            report.margins.0, report.margins.1
        )));
    }
    let plan = FolkPlan::new(game, profile, config)?;
    let director = Rc::new(RefCell::new(Director {
        rng: ChaCha8Rng::seed_from_u64(plan.seed),
        plan,
        cursor: 0,
        phases: Vec::new(),
    }));
    Ok((
        FolkAgent {
            player: 1,
            director: Rc::clone(&director),
        },
        FolkAgent {
            player: 2,
            director,
        },
    ))
}

/// Plays `horizon` simultaneous rounds and returns one trace per player.
/// Each player's hypotheses see that player's own history.
pub fn play_match(
    game: &Game,
    (agent1, registry1): (&mut dyn Agent, &[Hypothesis]),
    (agent2, registry2): (&mut dyn Agent, &[Hypothesis]),
    horizon: usize,
) -> Result<(Trace, Trace)> {
    if horizon == 0 {
        return Err(Error::parameter("horizon must be ≥ 1"));
    }
    let mut tr1 = Trace::new(registry1.iter().map(|h| h.id().to_string()))?;
    let mut tr2 = Trace::new(registry2.iter().map(|h| h.id().to_string()))?;
    let p1 = game.problem(1);
    let p2 = game.problem(2);
    for t in 1..=horizon {
        let adv1 = registry1
            .iter()
            .map(|h| h.advise(t, tr1.rounds(), &p1))
            .collect::<Result<Vec<_>>>()?;
        let adv2 = registry2
            .iter()
            .map(|h| h.advise(t, tr2.rounds(), &p2))
            .collect::<Result<Vec<_>>>()?;
        let d1 = agent1.decide(t, tr1.rounds(), &p1, &adv1)?;
        let d2 = agent2.decide(t, tr2.rounds(), &p2, &adv2)?;
        let index = |p: &DecisionProblem, d: &Decision| {
            p.position(d.step.choice().id())
                .ok_or_else(|| Error::Membership {
                    round: t,
                    option: d.step.choice().id().to_string(),
                })
        };
        let (a1, a2) = (index(&p1, &d1)?, index(&p2, &d2)?);
        let (r1, r2) = (game.payoff(1, a1, a2), game.payoff(2, a1, a2));
        agent1.observe(t, r1)?;
        agent2.observe(t, r2)?;
        tr1.push(p1.clone(), d1.step, r1, adv1, &d1.tested)?;
        tr2.push(p2.clone(), d2.step, r2, adv2, &d2.tested)?;
    }
    Ok((tr1, tr2))
}

/// Frequencies of joint play over the 1-based inclusive round window.
pub fn empirical_distribution(
    game: &Game,
    traces: (&Trace, &Trace),
    window: std::ops::RangeInclusive<usize>,
) -> Result<CorrelatedProfile> {
    let (start, end) = (*window.start(), *window.end());
    if start == 0 || start > end {
        return Err(Error::Empty("window".into()));
    }
    let n1 = game.strategies(1).len();
    let n2 = game.strategies(2).len();
    let mut w = vec![vec![0.0; n2]; n1];
    for t in start..=end {
        let c1 = traces.0.round(t)?.choice().id();
        let c2 = traces.1.round(t)?.choice().id();
        let r = game.strategies(1).iter().position(|l| l == c1);
        let c = game.strategies(2).iter().position(|l| l == c2);
        match (r, c) {
            (Some(r), Some(c)) => w[r][c] += 1.0,
            _ => {
                return Err(Error::Membership {
                    round: t,
                    option: format!("{c1}/{c2}"),
                })
            }
        }
    }
    let n = (end - start + 1) as f64;
    for row in &mut w {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    Ok(CorrelatedProfile { weights: w })
}
