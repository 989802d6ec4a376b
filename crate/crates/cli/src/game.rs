use std::fmt::Write as _;
use std::path::Path;

use bria::auction::{AuctionAgent, BriaRun};
use bria::game::{
    empirical_distribution, folk_agents, is_strictly_individually_rational, play_match,
    pure_maximin, CorrelatedProfile, FolkConfig, Game,
};
use bria::hypotheses::Hypothesis;
use bria::io::write_ledger_csv;
use bria::metrics::{overestimation_trajectory, tail_mean};
use bria::summary::summarize;
use bria::Trace;

use crate::artifacts::{
    allowance_totals, coverage_csv, coverage_reports, manifest, overestimation_csv,
    write_trace_files,
};
use crate::config::Config;
use crate::error::{create_dir, write_file, CliError};
use crate::setup::{self, AuditSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Folk,
    Auction,
}

pub fn load_game(path: &Path) -> Result<Game, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Game::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn profile(cfg: &Config, game: &Game) -> Result<CorrelatedProfile, CliError> {
    if let Some(w) = cfg.get("folk.weights") {
        let rows = w
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|x| bria::numeric::parse_real(x.trim()))
                    .collect::<bria::Result<Vec<f64>>>()
            })
            .collect::<bria::Result<Vec<_>>>()
            .map_err(|e| cfg.error("folk.weights", e))?;
        return CorrelatedProfile::new(rows).map_err(|e| cfg.error("folk.weights", e));
    }
    let pair = cfg.get("folk.profile").unwrap_or("");
    let labels: Vec<&str> = pair.split(',').map(str::trim).collect();
    let find = |player: usize, label: &str| game.strategies(player).iter().position(|s| s == label);
    match labels.as_slice() {
        [a, b] => match (find(1, a), find(2, b)) {
            (Some(r), Some(c)) => Ok(CorrelatedProfile::pure(game, r, c)),
            _ => Err(cfg.error("folk.profile", format!("unknown strategy pair `{pair}`"))),
        },
        _ => Err(cfg.error(
            "folk.profile",
            "expected `row_label,column_label` or folk.weights",
        )),
    }
}

fn folk_config(cfg: &Config, seed: u64) -> Result<FolkConfig, CliError> {
    let v = match cfg.reals("folk.v")? {
        Some(v) if v.len() == 2 => Some((v[0], v[1])),
        Some(_) => return Err(cfg.error("folk.v", "expected two estimates `v1,v2`")),
        None => None,
    };
    let cycle = cfg.usize_or("folk.cycle", 1000)?;
    Ok(FolkConfig {
        p_c: cfg.real_or("folk.p_c", 0.9)?,
        p_punish: cfg.reals("folk.p_punish")?,
        v,
        cycle_denominator: u32::try_from(cycle)
            .map_err(|_| cfg.error("folk.cycle", "too large"))?,
        seed,
    })
}

fn optional_registry(cfg: &Config, key: &str) -> Result<Vec<Hypothesis>, CliError> {
    if cfg.contains(key) {
        setup::registry(cfg, key)
    } else {
        Ok(Vec::new())
    }
}

struct PlayerResult {
    trace: Trace,
    ledger: Option<BriaRun>,
}

fn write_player(
    dir: &Path,
    player: usize,
    p: &PlayerResult,
    settings: &AuditSettings,
) -> Result<String, CliError> {
    create_dir(dir)?;
    write_trace_files(dir, &p.trace)?;
    let rows: Option<Vec<Vec<f64>>> = p
        .ledger
        .as_ref()
        .map(|r| r.snapshots.iter().map(|s| s.allowance.clone()).collect());
    if let Some(run) = &p.ledger {
        let mut buf = Vec::new();
        write_ledger_csv(run, &mut buf).map_err(CliError::runtime)?;
        write_file(&dir.join("ledger.csv"), buf)?;
    }
    let reports = coverage_reports(&p.trace, settings, rows.as_deref())?;
    let allowance = rows.as_deref().map(allowance_totals);
    write_file(&dir.join("coverage.csv"), coverage_csv(&reports))?;
    write_file(
        &dir.join("overestimation.csv"),
        overestimation_csv(&overestimation_trajectory(&p.trace), allowance.as_deref()),
    )?;
    let text = format!(
        "player {player}\n{}",
        summarize(&p.trace, None, settings.tail, &reports).render()
    );
    write_file(&dir.join("summary.txt"), &text)?;
    Ok(text)
}

pub fn execute(game_path: &Path, mode: Mode, cfg: &Config) -> Result<String, CliError> {
    let game = load_game(game_path)?;
    let horizon = setup::horizon(cfg)?;
    let seed = cfg.u64_or("agent.seed", 0)?;
    let settings = setup::audit_settings(cfg)?;
    let window = cfg
        .usize_or("game.window", horizon.div_ceil(10))?
        .clamp(1, horizon);
    let out = setup::output_dir(cfg);
    let reg1 = optional_registry(cfg, "registry.player1")?;
    let reg2 = optional_registry(cfg, "registry.player2")?;

    let mut target = None;
    let (p1, p2) = match mode {
        Mode::Folk => {
            cfg.get("agent.schedule");
            let profile = profile(cfg, &game)?;
            let fc = folk_config(cfg, seed)?;
            cfg.reject_unused()?;
            let (mut a1, mut a2) =
                folk_agents(&game, &profile, &fc).map_err(CliError::validation)?;
            target = Some(a1.plan().target());
            let (t1, t2) = play_match(&game, (&mut a1, &reg1), (&mut a2, &reg2), horizon)
                .map_err(CliError::runtime)?;
            (
                PlayerResult {
                    trace: t1,
                    ledger: None,
                },
                PlayerResult {
                    trace: t2,
                    ledger: None,
                },
            )
        }
        Mode::Auction => {
            let schedule = setup::schedule(cfg)?;
            cfg.params("folk", &[]);
            cfg.reject_unused()?;
            if reg1.is_empty() || reg2.is_empty() {
                return Err(CliError::Validation(
                    "auction mode needs registry.player1 and registry.player2".into(),
                ));
            }
            let mut b1 = AuctionAgent::new(reg1.len(), Box::new(schedule));
            let mut b2 = AuctionAgent::new(reg2.len(), Box::new(schedule));
            let (t1, t2) = play_match(&game, (&mut b1, &reg1), (&mut b2, &reg2), horizon)
                .map_err(CliError::runtime)?;
            let wrap = |agent: &AuctionAgent, trace: Trace| PlayerResult {
                ledger: Some(BriaRun {
                    trace: trace.clone(),
                    ledger: agent.ledger().clone(),
                    snapshots: agent.snapshots().to_vec(),
                    outcomes: agent.outcomes().to_vec(),
                    reports: Vec::new(),
                    schedule,
                    seed,
                }),
                trace,
            };
            (wrap(&b1, t1), wrap(&b2, t2))
        }
    };

    create_dir(&out)?;
    let mut joint =
        String::from("t,p1_choice,p2_choice,p1_estimate,p2_estimate,p1_reward,p2_reward\n");
    for (k, (r1, r2)) in p1.trace.rounds().iter().zip(p2.trace.rounds()).enumerate() {
        let _ = writeln!(
            joint,
            "{},{},{},{},{},{},{}",
            k + 1,
            r1.choice().id(),
            r2.choice().id(),
            r1.estimate(),
            r2.estimate(),
            r1.reward,
            r2.reward
        );
    }
    write_file(&out.join("joint_trace.csv"), joint)?;

    let mut dist =
        String::from("window_start,window_end,p1_strategy,p2_strategy,frequency,target\n");
    let mut start = 1;
    while start <= horizon {
        let end = (start + window - 1).min(horizon);
        let e = empirical_distribution(&game, (&p1.trace, &p2.trace), start..=end)
            .map_err(CliError::runtime)?;
        for (r, row) in game.strategies(1).iter().enumerate() {
            for (c, col) in game.strategies(2).iter().enumerate() {
                let tgt = target
                    .as_ref()
                    .map_or(String::new(), |t| t.weight(r, c).to_string());
                let _ = writeln!(dist, "{start},{end},{row},{col},{},{tgt}", e.weight(r, c));
            }
        }
        start = end + 1;
    }
    write_file(&out.join("distribution.csv"), dist)?;

    let s1 = write_player(&out.join("p1"), 1, &p1, &settings)?;
    let s2 = write_player(&out.join("p2"), 2, &p2, &settings)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "mode {}",
        if mode == Mode::Folk {
            "folk"
        } else {
            "auction"
        }
    );
    let _ = writeln!(text, "horizon {horizon}");
    for player in [1, 2] {
        let (m, _) = pure_maximin(&game, player).map_err(CliError::runtime)?;
        let _ = writeln!(text, "maximin_p{player} {m:.6}");
    }
    for (player, p) in [(1, &p1), (2, &p2)] {
        let rewards: Vec<f64> = p.trace.rounds().iter().map(|r| r.reward).collect();
        let _ = writeln!(
            text,
            "tail_payoff_p{player} {:.6}",
            tail_mean(&rewards, settings.tail)
        );
    }
    let whole = empirical_distribution(&game, (&p1.trace, &p2.trace), 1..=horizon)
        .map_err(CliError::runtime)?;
    if let Some(t) = &target {
        let tv = whole.total_variation(t).map_err(CliError::runtime)?;
        let _ = writeln!(text, "tv_to_target {tv:.6}");
        let ir = is_strictly_individually_rational(&game, t);
        let _ = writeln!(
            text,
            "target_margins {:.6} {:.6}",
            ir.margins.0, ir.margins.1
        );
    }
    text.push_str(&s1);
    text.push_str(&s2);
    write_file(&out.join("summary.txt"), &text)?;
    let settings_text = format!(
        "game = {}\nmode = {mode:?}\n{}",
        game_path.display(),
        cfg.render()
    );
    write_file(
        &out.join("manifest.txt"),
        manifest(
            "game",
            cfg.path(),
            &settings_text,
            &[
                "joint_trace.csv",
                "distribution.csv",
                "summary.txt",
                "p1/",
                "p2/",
            ],
        ),
    )?;
    Ok(text)
}
