//! Shared generators and checkers for the acceptance and property targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bria::auction::{run_bria, AuctionConfig, BriaRun};
use bria::environments::{
    DecoyFaces, DecoyPayoff, DecoySpec, DigitMode, DigitSource, EasyOptions, Environment, LoeDemo,
    Lottery, LotteryDist, Newcomb, PiBetting, ProductEnvironment, Sao,
};
use bria::hypotheses::{face_value_hypothesis, Hypothesis};
use bria::io::{write_hypotheses_csv, write_trace_csv};
use bria::metrics::{cumulative_overestimation, empirical_record, prune_test_set, rejection_times};
use bria::numeric::Sequence;
use bria::{AgentStep, DecisionProblem, OptionToken, Round, RoundSet, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Multiples of 1/16, so every sum below is exact in binary floating point.
pub fn dyadic(rng: &mut impl Rng) -> f64 {
    f64::from(rng.random_range(0..=16u32)) / 16.0
}

pub const OPTION_COUNT: usize = 3;
pub const HYPOTHESIS_COUNT: usize = 3;

fn menu() -> DecisionProblem {
    DecisionProblem::new(
        (0..OPTION_COUNT)
            .map(|k| OptionToken::new(format!("o{k}"), format!("o{k}")))
            .collect(),
    )
    .unwrap()
}

/// Per-round raw values of a random trace, before validation.
#[derive(Clone, Debug)]
pub struct RawRound {
    pub choice: usize,
    pub estimate: f64,
    pub reward: f64,
    pub advice: Vec<(usize, f64)>,
    pub test_mask: Vec<bool>,
}

pub fn random_rounds(seed: u64, len: usize) -> Vec<RawRound> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| RawRound {
            choice: rng.random_range(0..OPTION_COUNT),
            estimate: dyadic(&mut rng),
            reward: dyadic(&mut rng),
            advice: (0..HYPOTHESIS_COUNT)
                .map(|_| (rng.random_range(0..OPTION_COUNT), dyadic(&mut rng)))
                .collect(),
            test_mask: (0..HYPOTHESIS_COUNT)
                .map(|_| rng.random_bool(0.5))
                .collect(),
        })
        .collect()
}

/// Builds a valid trace: a hypothesis is tested only where it was followed.
pub fn build_trace(rounds: &[RawRound]) -> Trace {
    let p = menu();
    let mut tr = Trace::new((0..HYPOTHESIS_COUNT).map(|i| format!("h{i}"))).unwrap();
    for r in rounds {
        let step = AgentStep::new(p.options()[r.choice].clone(), r.estimate).unwrap();
        let advice = r
            .advice
            .iter()
            .map(|&(c, e)| AgentStep::new(p.options()[c].clone(), e).unwrap())
            .collect();
        let tested: Vec<usize> = (0..HYPOTHESIS_COUNT)
            .filter(|&i| r.test_mask[i] && r.advice[i].0 == r.choice)
            .collect();
        tr.push(p.clone(), step, r.reward, advice, &tested).unwrap();
    }
    tr
}

pub fn random_trace(seed: u64, len: usize) -> Trace {
    build_trace(&random_rounds(seed, len))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn check_additivity(tr: &Trace) -> Result<(), String> {
    let mut prev = 0.0;
    for t in 1..=tr.len() {
        let r: &Round = tr.round(t).unwrap();
        let l = cumulative_overestimation(tr, t).unwrap();
        ensure(l == prev + (r.estimate() - r.reward), || {
            format!("additivity fails at T={t}")
        })?;
        prev = l;
    }
    Ok(())
}

pub fn check_pruning(tr: &Trace) -> Result<(), String> {
    for log in tr.logs() {
        let m = log.tested().clone();
        let pruned = prune_test_set(&m, log.id(), tr).unwrap();
        ensure(pruned.is_subset(&m), || "pruning added rounds".into())?;
        for t in 1..=tr.len() {
            let full = empirical_record(tr, log.id(), &m, t).unwrap();
            let cut = empirical_record(tr, log.id(), &pruned, t).unwrap();
            ensure(cut <= full, || {
                format!("{}: pruned record {cut} > {full} at T={t}", log.id())
            })?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modification {
    Estimate,
    Reward,
    Both,
}

/// Rewrites up to `k` rounds (chosen from `seed`) and checks
/// `|L_T − L'_T| ≤ bound·k` at every T, where the bound is 1 when each
/// modified round changes only one of estimate and reward, else 2.
pub fn check_finite_modification(
    rounds: &[RawRound],
    k: usize,
    what: Modification,
    seed: u64,
) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut changed = rounds.to_vec();
    let mut touched = BTreeSet::new();
    for _ in 0..k {
        if rounds.is_empty() {
            break;
        }
        let at = rng.random_range(0..rounds.len());
        touched.insert(at);
        if what != Modification::Reward {
            changed[at].estimate = dyadic(&mut rng);
        }
        if what != Modification::Estimate {
            changed[at].reward = dyadic(&mut rng);
        }
    }
    let (a, b) = (build_trace(rounds), build_trace(&changed));
    let per_round = if what == Modification::Both { 2.0 } else { 1.0 };
    let bound = per_round * touched.len() as f64;
    for t in 1..=rounds.len() {
        let d = (cumulative_overestimation(&a, t).unwrap()
            - cumulative_overestimation(&b, t).unwrap())
        .abs();
        ensure(d <= bound, || format!("|ΔL_{t}| = {d} > {bound}"))?;
    }
    Ok(())
}

/// Raises estimates by non-negative dyadic `eps` (capped so they stay in
/// [0,1]) and checks the exact shift of `L_T` and the shrinking of every
/// rejection set.
pub fn check_estimate_inflation(rounds: &[RawRound], seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raised = rounds.to_vec();
    let mut eps = Vec::new();
    for r in &mut raised {
        let room = ((1.0 - r.estimate) * 16.0) as u32;
        let e = f64::from(rng.random_range(0..=room)) / 16.0;
        r.estimate += e;
        eps.push(e);
    }
    let (a, b) = (build_trace(rounds), build_trace(&raised));
    let mut total = 0.0;
    for t in 1..=rounds.len() {
        total += eps[t - 1];
        let la = cumulative_overestimation(&a, t).unwrap();
        let lb = cumulative_overestimation(&b, t).unwrap();
        ensure(lb == la + total, || {
            format!("L'_{t} = {lb} but L_{t} + Σε = {}", la + total)
        })?;
    }
    for log in a.logs() {
        let before: BTreeSet<usize> = rejection_times(&a, log.id(), a.len())
            .unwrap()
            .into_iter()
            .collect();
        let after: BTreeSet<usize> = rejection_times(&b, log.id(), b.len())
            .unwrap()
            .into_iter()
            .collect();
        ensure(after.is_subset(&before), || {
            format!("{}: inflation added rejections", log.id())
        })?;
    }
    Ok(())
}

/// Every bundled environment, seeded.
pub fn all_environments(seed: u64) -> Vec<Box<dyn Environment>> {
    let lottery = |s| {
        Lottery::new(
            Sequence::constant(0.6).unwrap(),
            LotteryDist::Bernoulli,
            Some(Sequence::constant(0.4).unwrap()),
            s,
        )
        .unwrap()
    };
    vec![
        Box::new(Sao::new()),
        Box::new(PiBetting::new(DigitSource::spigot_pi(), seed)),
        Box::new(PiBetting::new(
            DigitSource::new(DigitMode::SeededPrf, seed, 0),
            seed,
        )),
        Box::new(
            EasyOptions::new(
                Sequence::cycle(vec![0.3, 0.7]).unwrap(),
                DecoySpec::default(),
                seed,
            )
            .unwrap(),
        ),
        Box::new(
            EasyOptions::new(
                Sequence::constant(0.4).unwrap(),
                DecoySpec {
                    faces: DecoyFaces::Fixed(vec![0.9, 0.1]),
                    payoff: DecoyPayoff::Zero,
                },
                seed,
            )
            .unwrap()
            .labeled(true)
            .with_bonus(true),
        ),
        Box::new(lottery(seed)),
        Box::new(
            Lottery::new(
                Sequence::cycle(vec![0.3, 0.6]).unwrap(),
                LotteryDist::UniformAroundMean { half_width: 0.3 },
                None,
                seed,
            )
            .unwrap(),
        ),
        Box::new(Newcomb::new()),
        Box::new(LoeDemo::new(4, seed).unwrap()),
        Box::new(
            ProductEnvironment::new(vec![Box::new(Sao::new()), Box::new(lottery(seed ^ 1))])
                .unwrap(),
        ),
    ]
}

/// Drives `env` with random choices and, every other round, a random
/// declared distribution; every reward must lie in [0,1].
pub fn fuzz_rewards(env: &mut dyn Environment, seed: u64, rounds: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history: Vec<Round> = Vec::new();
    for t in 1..=rounds {
        let p = env
            .next_problem(t, &history)
            .map_err(|e| format!("{}: {e}", env.name()))?;
        let choice = p.options()[rng.random_range(0..p.len())].clone();
        let declared: Option<Vec<f64>> = rng.random_bool(0.5).then(|| {
            let raw: Vec<f64> = (0..p.len()).map(|_| rng.random::<f64>() + 1e-9).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        });
        let r = env
            .resolve_reward(t, &history, &p, &choice, declared.as_deref())
            .map_err(|e| format!("{}: {e}", env.name()))?;
        ensure((0.0..=1.0).contains(&r), || {
            format!("{}: reward {r} at t={t}", env.name())
        })?;
        let step = AgentStep::new(choice, 0.0).unwrap();
        history.push(Round {
            problem: p,
            step,
            reward: r,
        });
    }
    Ok(())
}

pub fn trace_bytes(tr: &Trace) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace_csv(tr, &mut out).unwrap();
    write_hypotheses_csv(tr, &mut out).unwrap();
    out
}

/// Runs the auction twice on freshly built environments and compares the
/// CSV output byte for byte.
pub fn check_determinism(env_index: usize, seed: u64, horizon: usize) -> Result<(), String> {
    let registry: Vec<Hypothesis> = vec![face_value_hypothesis("face")];
    let config = AuctionConfig {
        seed,
        ..AuctionConfig::default()
    };
    let once = || -> Result<BriaRun, String> {
        let mut env = all_environments(seed).swap_remove(env_index);
        run_bria(env.as_mut(), &registry, horizon, &config).map_err(|e| e.to_string())
    };
    let (a, b) = (once()?, once()?);
    ensure(trace_bytes(&a.trace) == trace_bytes(&b.trace), || {
        format!("environment {env_index}: reruns differ")
    })
}

pub fn record_additivity(tr: &Trace, split_seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    for log in tr.logs() {
        let (mut left, mut right) = (RoundSet::new(), RoundSet::new());
        for &t in log.tested() {
            if rng.random_bool(0.5) {
                left.insert(t);
            } else {
                right.insert(t);
            }
        }
        let n = tr.len();
        let whole = empirical_record(tr, log.id(), log.tested(), n).unwrap();
        let parts = empirical_record(tr, log.id(), &left, n).unwrap()
            + empirical_record(tr, log.id(), &right, n).unwrap();
        ensure(whole == parts, || {
            format!("{}: record {whole} ≠ {parts}", log.id())
        })?;
    }
    Ok(())
}
