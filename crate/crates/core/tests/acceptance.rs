//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;

use bria::agent::{run_agent, FixedAgent, FixedPolicy};
use bria::auction::{check_invariants, run_bria, AuctionAgent, AuctionConfig, BriaRun, Schedule};
use bria::environments::{
    DecoyFaces, DecoyPayoff, DecoySpec, DigitMode, DigitSource, EasyOptions, Environment, Lottery,
    LotteryDist, Newcomb, PiBetting, ProductEnvironment, Sao,
};
use bria::game::{
    empirical_distribution, folk_agents, play_match, pure_maximin, CorrelatedProfile, FolkConfig,
    Game,
};
use bria::hypotheses::{
    const_hypothesis, diagonalize_fixed, face_value_hypothesis, guarantee_hypothesis,
    lift_hypothesis, margin_hypothesis, mean_margin_hypothesis, Hypothesis,
};
use bria::metrics::{
    coverage_audit, empirical_record, overestimation_trajectory, project_trace, tail_mean,
    AuditParams, Coverage,
};
use bria::numeric::Sequence;
use bria::randomness::{build_schnorr_martingale, growth_factor, martingale_check, Martingale};
use bria::summary::summarize;
use bria::Trace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::Modification;

const EXACT_TOL: f64 = 1e-9;
const TAIL: f64 = 0.5;

/// Criterion 1 bookkeeping: every auction run below is checked twice, by
/// the library and by an independent replay of the ledger from the trace.
#[derive(Default)]
struct Exactness {
    runs: usize,
    rounds: usize,
    rejection_checks: usize,
    failures: Vec<String>,
}

impl Exactness {
    fn check(&mut self, label: &str, run: &BriaRun) {
        self.runs += 1;
        self.rounds += run.trace.len();
        match check_invariants(run) {
            Ok(rep) if rep.holds(EXACT_TOL) => self.rejection_checks += rep.rejection_checks,
            Ok(rep) => self
                .failures
                .push(format!("{label}: library check {rep:?}")),
            Err(e) => self.failures.push(format!("{label}: {e}")),
        }
        if let Err(e) = replay_ledger(run) {
            self.failures.push(format!("{label}: replay {e}"));
        }
    }
}

/// Kahan summation, kept separate from the library's accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn allowance(n: usize, i: usize) -> f64 {
    if i < n {
        1.0 / (n as f64 * (i * i) as f64)
    } else {
        0.0
    }
}

/// Rebuilds wealth, allowance and shortfalls from the trace alone using the
/// harmonic schedule, and checks winner choice, the overestimation bound,
/// the ledger identity and the rejection shortfall bound at every round.
fn replay_ledger(run: &BriaRun) -> Result<(), String> {
    if run.schedule != Schedule::Harmonic {
        return Err("replay assumes the harmonic schedule".into());
    }
    let tr = &run.trace;
    let logs = tr.logs();
    let h = logs.len();
    let (mut wealth, mut paid, mut shortfall) = (
        vec![Kahan::default(); h],
        vec![Kahan::default(); h],
        vec![Kahan::default(); h],
    );
    let (mut l, mut net) = (Kahan::default(), Kahan::default());
    for t in 1..=tr.len() {
        let round = tr.round(t).map_err(|e| e.to_string())?;
        let e = round.estimate();
        let tested: Vec<usize> = (0..h).filter(|&p| logs[p].tested().contains(&t)).collect();
        // position p has index p + 1 and first receives allowance at round p + 2
        let active: Vec<usize> = (0..h).filter(|&p| p + 2 <= t).collect();
        let winner = if active.is_empty() {
            if e != 0.0 || !tested.is_empty() {
                return Err(format!(
                    "t={t}: fallback round with estimate {e}, tests {tested:?}"
                ));
            }
            None
        } else {
            let bid = |p: usize| logs[p].promise(t).min(wealth[p].sum.max(0.0));
            let best = active
                .iter()
                .map(|&p| bid(p))
                .fold(f64::NEG_INFINITY, f64::max);
            if (e - best).abs() > EXACT_TOL {
                return Err(format!("t={t}: estimate {e} but highest bid {best}"));
            }
            match tested.as_slice() {
                [w] if active.contains(w) && (bid(*w) - best).abs() <= EXACT_TOL => Some(*w),
                _ => {
                    return Err(format!(
                        "t={t}: tested {tested:?} is not a single top bidder"
                    ))
                }
            }
        };
        for p in 0..h {
            let promise = logs[p].promise(t);
            if promise > e && shortfall[p].sum <= paid[p].sum - promise {
                return Err(format!("t={t}: shortfall bound fails for {}", logs[p].id()));
            }
        }
        for p in 0..h {
            let a = allowance(t, p + 1);
            wealth[p].add(a);
            paid[p].add(a);
        }
        if let Some(w) = winner {
            wealth[w].add(round.reward - e);
            shortfall[w].add(logs[w].promise(t) - round.reward);
            net.add(round.reward - e);
        }
        l.add(e - round.reward);
        let (l, net) = (l.sum, net.sum);
        let total_a: f64 = paid.iter().map(|k| k.sum).sum();
        let total_w: f64 = wealth.iter().map(|k| k.sum).sum();
        if l > total_a + EXACT_TOL {
            return Err(format!("t={t}: L = {l} exceeds allowance {total_a}"));
        }
        if (total_w - total_a - net).abs() > EXACT_TOL {
            return Err(format!(
                "t={t}: identity off by {}",
                total_w - total_a - net
            ));
        }
    }
    Ok(())
}

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    fn failed(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }
}

fn auction(
    ex: &mut Exactness,
    label: &str,
    env: &mut dyn Environment,
    registry: &[Hypothesis],
    horizon: usize,
    seed: u64,
    shuffle: bool,
) -> Result<BriaRun, String> {
    let config = AuctionConfig {
        seed,
        shuffle_registry: shuffle,
        ..AuctionConfig::default()
    };
    let run = run_bria(env, registry, horizon, &config).map_err(|e| format!("{label}: {e}"))?;
    ex.check(label, &run);
    Ok(run)
}

fn rewards(tr: &Trace) -> Vec<f64> {
    tr.rounds().iter().map(|r| r.reward).collect()
}

fn criterion_sao(ex: &mut Exactness) -> Result<Verdict, String> {
    let registry = vec![
        const_hypothesis("h_a0", "a0", 0.5).unwrap(),
        const_hypothesis("h_a1", "a1", 0.5).unwrap(),
        face_value_hypothesis("h_face"),
    ];
    let (mut worst_freq, mut worst_reward) = (1.0f64, 1.0f64);
    for seed in 0..10 {
        let mut env = Sao::new();
        let run = auction(
            ex,
            &format!("sao seed {seed}"),
            &mut env,
            &registry,
            20_000,
            seed,
            true,
        )?;
        let s = summarize(&run.trace, Some(&env), TAIL, &[]);
        worst_freq = worst_freq.min(s.frequency("a0"));
        worst_reward = worst_reward.min(s.tail_reward);
    }
    Ok(Verdict::new(
        worst_freq >= 0.99 && worst_reward >= 0.49,
        format!(
            "min a0 frequency {worst_freq:.4}, min tail reward {worst_reward:.4} over 10 seeds"
        ),
    ))
}

fn criterion_pi(ex: &mut Exactness) -> Result<Verdict, String> {
    let mut registry = vec![face_value_hypothesis("h_face")];
    for (k, eps) in [0.1, 0.05, 0.01].into_iter().enumerate() {
        registry.push(margin_hypothesis(format!("h_pi{k}"), "a_pi", 0.5, eps).unwrap());
    }
    let mut pass = true;
    let mut worst_gap = f64::INFINITY;
    let mut worst_est = f64::INFINITY;
    for seed in 0..5 {
        let digits = DigitSource::new(DigitMode::SeededPrf, 0xD1_6175 ^ seed, 0);
        let mut env = PiBetting::new(digits, seed);
        let run = auction(
            ex,
            &format!("pi seed {seed}"),
            &mut env,
            &registry,
            50_000,
            seed,
            false,
        )?;
        let s = summarize(&run.trace, Some(&env), TAIL, &[]);
        let bench = s
            .tail_benchmark
            .ok_or("pi environment reports no benchmark")?;
        worst_gap = worst_gap.min(s.tail_reward - bench);
        worst_est = worst_est.min(s.tail_estimate);
        pass &= s.tail_reward >= bench - 0.05 && s.tail_estimate >= 0.45;
    }
    Ok(Verdict::new(
        pass,
        format!("min (tail reward − benchmark) {worst_gap:.4}, min tail estimate {worst_est:.4} over 5 seeds"),
    ))
}

fn criterion_easy(ex: &mut Exactness) -> Result<Verdict, String> {
    let floor = Sequence::cycle(vec![0.3, 0.7]).unwrap();
    let registry = vec![
        guarantee_hypothesis("h_g", "guaranteed", floor.clone()),
        face_value_hypothesis("h_face"),
        const_hypothesis("h_decoy", "decoy", 0.9).unwrap(),
    ];
    let mut pass = true;
    let mut worst_gap = f64::INFINITY;
    for payoff in [DecoyPayoff::FaceValue, DecoyPayoff::Zero] {
        for seed in 0..3 {
            let decoys = DecoySpec {
                payoff,
                ..DecoySpec::default()
            };
            let mut env = EasyOptions::new(floor.clone(), decoys, seed).unwrap();
            let run = auction(
                ex,
                &format!("easy {payoff:?} seed {seed}"),
                &mut env,
                &registry,
                20_000,
                seed,
                false,
            )?;
            let s = summarize(&run.trace, Some(&env), TAIL, &[]);
            let bench = s.tail_benchmark.ok_or("easy options report no benchmark")?;
            worst_gap = worst_gap.min(s.tail_reward - bench);
            pass &= s.tail_reward >= bench - 0.02;
        }
    }
    let thirds = Sequence::constant(2.0 / 3.0).unwrap();
    let registry = vec![
        face_value_hypothesis("h_face"),
        guarantee_hypothesis("h_g", "guaranteed", thirds.clone()),
        const_hypothesis("h_decoy", "decoy", 0.9).unwrap(),
    ];
    let decoys = DecoySpec {
        faces: DecoyFaces::Fixed(vec![1.0 / 3.0]),
        payoff: DecoyPayoff::FaceValue,
    };
    let mut env = EasyOptions::new(thirds, decoys, 0).unwrap().labeled(true);
    let run = auction(ex, "thirds", &mut env, &registry, 20_000, 0, false)?;
    let freq = summarize(&run.trace, Some(&env), TAIL, &[]).frequency("guaranteed");
    pass &= freq >= 0.99;
    Ok(Verdict::new(
        pass,
        format!("min (tail reward − tail L) {worst_gap:.4} over 6 runs; 2/3 frequency {freq:.4}"),
    ))
}

fn criterion_lottery(ex: &mut Exactness) -> Result<Verdict, String> {
    let mean = Sequence::constant(0.6).unwrap();
    // Lottery hypotheses go first: the larger early allowances let a broke
    // hypothesis recover within the horizon.
    let mut registry: Vec<Hypothesis> = [0.1, 0.05, 0.01]
        .into_iter()
        .enumerate()
        .map(|(k, eps)| {
            mean_margin_hypothesis(format!("h_mu{k}"), "lottery", mean.clone(), eps).unwrap()
        })
        .collect();
    registry.push(face_value_hypothesis("h_face"));
    let mut worst = f64::INFINITY;
    for seed in 0..5 {
        let alt = Some(Sequence::constant(0.4).unwrap());
        let mut env = Lottery::new(mean.clone(), LotteryDist::Bernoulli, alt, seed).unwrap();
        let run = auction(
            ex,
            &format!("lottery seed {seed}"),
            &mut env,
            &registry,
            100_000,
            seed,
            false,
        )?;
        worst = worst.min(tail_mean(&rewards(&run.trace), TAIL));
    }
    Ok(Verdict::new(
        worst >= 0.57,
        format!("min tail reward {worst:.4} over 5 seeds"),
    ))
}

fn criterion_diagonal(ex: &mut Exactness) -> Result<Verdict, String> {
    let fixed = FixedAgent::new(FixedPolicy::First, 0.4).unwrap();
    let diag = diagonalize_fixed("diag", fixed.clone());
    let mut agent = fixed;
    let trace = run_agent(
        &mut Sao::new(),
        std::slice::from_ref(&diag),
        &mut agent,
        20_000,
    )
    .map_err(|e| e.to_string())?;
    let audit =
        coverage_audit(&trace, "diag", &AuditParams::default()).map_err(|e| e.to_string())?;

    let registry = vec![diag, const_hypothesis("h_a0", "a0", 0.5).unwrap()];
    let before = ex.failures.len();
    let run = auction(
        ex,
        "diagonal auction",
        &mut Sao::new(),
        &registry,
        20_000,
        0,
        false,
    )?;
    let clean = ex.failures.len() == before;
    let log = run.trace.log("diag").map_err(|e| e.to_string())?;
    let rejected: BTreeSet<usize> = (1..=run.trace.len())
        .filter(|&t| log.promise(t) > run.trace.round(t).unwrap().estimate())
        .collect();
    let width = run.trace.len() / 100;
    let (mut windows, mut tested) = (0, 0);
    for w in 0..100 {
        let range = w * width + 1..=(w + 1) * width;
        if rejected.range(range.clone()).next().is_some() {
            windows += 1;
            tested += usize::from(log.tested().range(range).next().is_some());
        }
    }
    let share = if windows == 0 {
        0.0
    } else {
        tested as f64 / windows as f64
    };
    Ok(Verdict::new(
        audit.classification == Coverage::ViolationSuspected && share >= 0.01 && clean,
        format!(
            "pure audit {}; auction: tested in {tested}/{windows} rejection windows, {} tests overall, invariants {}",
            audit.classification,
            log.tested().len(),
            if clean { "hold" } else { "violated" }
        ),
    ))
}

fn constant_registry() -> Vec<Hypothesis> {
    vec![
        const_hypothesis("c_min", "cooperate", 0.2).unwrap(),
        const_hypothesis("d_min", "defect", 0.2).unwrap(),
        const_hypothesis("c_max", "cooperate", 0.3).unwrap(),
        const_hypothesis("d_max", "defect", 0.4).unwrap(),
    ]
}

fn match_run(agent: &AuctionAgent, trace: Trace) -> Result<BriaRun, String> {
    let params = AuditParams {
        divergence_margin: agent.ledger().total_allowance().max(1.0),
        ..AuditParams::default()
    };
    let reports = trace
        .hypothesis_ids()
        .map(|id| coverage_audit(&trace, id, &params))
        .collect::<bria::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(BriaRun {
        trace,
        ledger: agent.ledger().clone(),
        snapshots: agent.snapshots().to_vec(),
        outcomes: agent.outcomes().to_vec(),
        reports,
        schedule: Schedule::Harmonic,
        seed: 0,
    })
}

fn criterion_folk(ex: &mut Exactness) -> Result<Verdict, String> {
    let game = Game::prisoners_dilemma();
    let profile = CorrelatedProfile::pure(&game, 0, 0);
    let horizon = 100_000;
    let (mut a1, mut a2) =
        folk_agents(&game, &profile, &FolkConfig::default()).map_err(|e| e.to_string())?;
    let plan = a1.plan();
    let registry = constant_registry();
    let (tr1, tr2) = play_match(&game, (&mut a1, &registry), (&mut a2, &registry), horizon)
        .map_err(|e| e.to_string())?;
    let joint =
        empirical_distribution(&game, (&tr1, &tr2), 1..=horizon).map_err(|e| e.to_string())?;
    let tv = joint
        .total_variation(&plan.target())
        .map_err(|e| e.to_string())?;

    let mut pass = tv <= 0.02;
    let mut classes = Vec::new();
    for (player, tr, v) in [(1, &tr1, plan.v.0), (2, &tr2, plan.v.1)] {
        let (maximin, _) = pure_maximin(&game, player).map_err(|e| e.to_string())?;
        for h in &registry {
            let rep =
                coverage_audit(tr, h.id(), &AuditParams::default()).map_err(|e| e.to_string())?;
            // never outpromising the estimate is the trivial case of finite rejection
            pass &= matches!(
                rep.classification,
                Coverage::NeverOutpromised | Coverage::FinitelyRejected | Coverage::RecordDiverging
            );
            let record = empirical_record(tr, h.id(), &rep_tested(tr, h.id()), horizon)
                .map_err(|e| e.to_string())?;
            pass &= record <= rep.tested_count as f64 * (maximin - v) + EXACT_TOL;
            classes.push(format!("p{player}:{}={}", h.id(), rep.classification));
        }
        let rate = overestimation_trajectory(tr).last().copied().unwrap_or(0.0) / horizon as f64;
        pass &= rate <= 0.0;
    }

    let small = vec![
        const_hypothesis("c", "cooperate", 0.2).unwrap(),
        const_hypothesis("d", "defect", 0.2).unwrap(),
    ];
    let mut b1 = AuctionAgent::new(small.len(), Box::new(Schedule::Harmonic));
    let mut b2 = AuctionAgent::new(small.len(), Box::new(Schedule::Harmonic));
    let (u1, u2) = play_match(&game, (&mut b1, &small), (&mut b2, &small), 50_000)
        .map_err(|e| e.to_string())?;
    let pay = (
        tail_mean(&rewards(&u1), TAIL),
        tail_mean(&rewards(&u2), TAIL),
    );
    ex.check("pd auction p1", &match_run(&b1, u1)?);
    ex.check("pd auction p2", &match_run(&b2, u2)?);
    pass &= pay.0 >= 0.18 && pay.1 >= 0.18;
    Ok(Verdict::new(
        pass,
        format!(
            "TV {tv:.4}; {}; auction pair tail payoffs {:.4}/{:.4}",
            classes.join(" "),
            pay.0,
            pay.1
        ),
    ))
}

fn rep_tested(tr: &Trace, id: &str) -> bria::RoundSet {
    tr.log(id).map(|l| l.tested().clone()).unwrap_or_default()
}

fn criterion_newcomb(ex: &mut Exactness) -> Result<Verdict, String> {
    let registry = vec![
        const_hypothesis("h_a1", "a1", 0.7).unwrap(),
        const_hypothesis("h_a2", "a2", 0.3).unwrap(),
        face_value_hypothesis("h_face"),
    ];
    let mut env = Newcomb::new();
    let run = auction(ex, "newcomb", &mut env, &registry, 20_000, 0, false)?;
    let s = summarize(&run.trace, Some(&env), TAIL, &[]);
    let f = s.frequency("a1");
    Ok(Verdict::new(
        f >= 0.99 && s.tail_reward >= 0.73,
        format!("a1 frequency {f:.4}, tail reward {:.4}", s.tail_reward),
    ))
}

fn criterion_randomness() -> Result<Verdict, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<u8> = (0..2000).map(|_| rng.random_range(0..2u8)).collect();
    let bets: BTreeSet<usize> = (1..=2000).filter(|_| rng.random_bool(0.7)).collect();
    let schnorr = build_schnorr_martingale(&bits, &bets, 0.05).map_err(|e| e.to_string())?;
    let adaptive = Martingale::new(
        1.0,
        |prefix: &[u8]| {
            let zeros = prefix.iter().filter(|&&b| b == 0).count() as f64;
            let q = (zeros + 1.0) / (prefix.len() as f64 + 2.0);
            (2.0 * q, 2.0 * (1.0 - q))
        },
        &bits,
    )
    .map_err(|e| e.to_string())?;
    let prefixes: Vec<Vec<u8>> = (0..1000)
        .map(|_| {
            let n = rng.random_range(0..200);
            (0..n).map(|_| rng.random_range(0..2u8)).collect()
        })
        .collect();
    let fair = martingale_check(&schnorr, &prefixes).passed()
        && martingale_check(&adaptive, &prefixes).passed();

    let h = 1e-8;
    let mut worst_rel = 0.0f64;
    for eps in [0.1, 0.05, 0.01] {
        let slope = (growth_factor(h, eps).unwrap() - growth_factor(0.0, eps).unwrap()) / h;
        worst_rel = worst_rel.max((slope - eps).abs() / eps);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let biased: Vec<u8> = (0..10_000)
        .map(|_| u8::from(!rng.random_bool(0.6)))
        .collect();
    let all: BTreeSet<usize> = (1..=biased.len()).collect();
    let m = build_schnorr_martingale(&biased, &all, 0.05).map_err(|e| e.to_string())?;
    let hit = m.trajectory().iter().position(|&d| d > 10.0);

    Ok(Verdict::new(
        fair && worst_rel <= 1e-4 && hit.is_some(),
        format!(
            "fairness on {} prefixes {}; growth slope rel. error {worst_rel:.2e}; capital 10 after {} bets",
            prefixes.len(),
            if fair { "holds" } else { "fails" },
            hit.map_or("never".to_string(), |k| k.to_string())
        ),
    ))
}

fn criterion_projection(ex: &mut Exactness) -> Result<Verdict, String> {
    let lottery = Lottery::new(
        Sequence::constant(0.6).unwrap(),
        LotteryDist::Bernoulli,
        Some(Sequence::constant(0.4).unwrap()),
        3,
    )
    .unwrap();
    let mut env = ProductEnvironment::new(vec![Box::new(Sao::new()), Box::new(lottery)]).unwrap();
    let lifted = [
        (
            lift_hypothesis(const_hypothesis("sao_a0", "a0", 0.5).unwrap(), 1).unwrap(),
            1,
        ),
        (
            lift_hypothesis(face_value_hypothesis("sao_face"), 1).unwrap(),
            1,
        ),
        (
            lift_hypothesis(
                mean_margin_hypothesis("lot_mu", "lottery", Sequence::constant(0.6).unwrap(), 0.05)
                    .unwrap(),
                2,
            )
            .unwrap(),
            2,
        ),
        (
            lift_hypothesis(const_hypothesis("lot_alt", "alt", 0.4).unwrap(), 2).unwrap(),
            2,
        ),
    ];
    let registry: Vec<Hypothesis> = lifted.iter().map(|(h, _)| h.clone()).collect();
    let horizon = 3000;
    let run = auction(ex, "product", &mut env, &registry, horizon, 0, false)?;
    let original = overestimation_trajectory(&run.trace);
    let mut pass = true;
    let mut record_checks = 0;
    for factor in [1, 2] {
        let projected = project_trace(&run.trace, factor).map_err(|e| e.to_string())?;
        pass &= overestimation_trajectory(&projected) == original;
        for (h, f) in &lifted {
            if *f != factor {
                continue;
            }
            let m = rep_tested(&run.trace, h.id());
            for t in 1..=horizon {
                let a = empirical_record(&run.trace, h.id(), &m, t).map_err(|e| e.to_string())?;
                let b = empirical_record(&projected, h.id(), &m, t).map_err(|e| e.to_string())?;
                pass &= a == b;
                record_checks += 1;
            }
        }
    }
    Ok(Verdict::new(
        pass,
        format!("L_T compared at {horizon} rounds per factor; {record_checks} record comparisons"),
    ))
}

fn criterion_properties() -> Result<Verdict, String> {
    let mut failures = Vec::new();
    let mut note = |r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(e);
        }
    };
    let cases = 200;
    for seed in 0..cases {
        let rounds = common::random_rounds(seed, 40);
        let tr = common::build_trace(&rounds);
        note(common::check_additivity(&tr));
        note(common::record_additivity(&tr, seed));
        note(common::check_pruning(&tr));
        let k = (seed % 6) as usize;
        note(common::check_finite_modification(
            &rounds,
            k,
            Modification::Estimate,
            seed,
        ));
        note(common::check_finite_modification(
            &rounds,
            k,
            Modification::Reward,
            seed,
        ));
        note(common::check_finite_modification(
            &rounds,
            k,
            Modification::Both,
            seed,
        ));
        note(common::check_estimate_inflation(&rounds, seed));
    }
    let env_count = common::all_environments(0).len();
    for seed in 0..5 {
        for (k, mut env) in common::all_environments(seed).into_iter().enumerate() {
            note(common::fuzz_rewards(
                env.as_mut(),
                seed * 31 + k as u64,
                500,
            ));
        }
    }
    for k in 0..env_count {
        note(common::check_determinism(k, 7, 300));
    }
    let detail = match failures.first() {
        None => format!("{cases} random traces, {env_count} environments fuzzed and rerun"),
        Some(first) => format!("{} failures, first: {first}", failures.len()),
    };
    Ok(Verdict::new(failures.is_empty(), detail))
}

fn main() -> ExitCode {
    let mut ex = Exactness::default();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    type Scenario = fn(&mut Exactness) -> Result<Verdict, String>;
    let scenarios: [(usize, &str, Scenario); 8] = [
        (2, "SAO", criterion_sao),
        (3, "pi betting", criterion_pi),
        (4, "easy options", criterion_easy),
        (5, "lotteries", criterion_lottery),
        (6, "diagonalization", criterion_diagonal),
        (7, "folk construction", criterion_folk),
        (8, "Newcomb", criterion_newcomb),
        (10, "projection", criterion_projection),
    ];
    for (id, name, f) in scenarios {
        let v = f(&mut ex).unwrap_or_else(Verdict::failed);
        results.push((id, name, v));
    }
    results.push((
        9,
        "randomness toolkit",
        criterion_randomness().unwrap_or_else(Verdict::failed),
    ));
    results.push((
        11,
        "property suites",
        criterion_properties().unwrap_or_else(Verdict::failed),
    ));
    let exact = Verdict::new(
        ex.failures.is_empty(),
        match ex.failures.first() {
            None => format!(
                "{} auction runs, {} rounds, {} rejection checks",
                ex.runs, ex.rounds, ex.rejection_checks
            ),
            Some(f) => format!("{} failures, first: {f}", ex.failures.len()),
        },
    );
    results.push((1, "auction exactness", exact));
    results.sort_by_key(|r| r.0);

    let mut ok = true;
    for (id, name, v) in &results {
        ok &= v.pass;
        println!(
            "criterion {id:>2} {} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
