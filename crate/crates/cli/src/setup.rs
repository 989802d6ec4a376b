//! Builds environments, registries and agents from a [`Config`].

use bria::agent::{Agent, BiasedTester, FixedAgent, FixedPolicy};
use bria::auction::Schedule;
use bria::environments::{
    DecoyFaces, DecoyPayoff, DecoySpec, DigitMode, DigitSource, EasyOptions, Environment, LoeDemo,
    Lottery, LotteryDist, Newcomb, PiBetting, ProductEnvironment, Sao,
};
use bria::hypotheses::{parse_registry, Hypothesis};
use bria::metrics::AuditParams;
use bria::numeric::Sequence;

use crate::config::Config;
use crate::error::CliError;

pub fn environment(cfg: &Config) -> Result<Box<dyn Environment>, CliError> {
    let seed = cfg.u64_or("env.seed", 0)?;
    let kind = cfg.require("env.kind")?;
    let bad = |e: bria::Error| cfg.error("env.kind", e);
    Ok(match kind {
        "sao" => Box::new(Sao::new()),
        "pi" => {
            let mode = match cfg.get("env.digits") {
                Some(m) => DigitMode::parse(m).map_err(|e| cfg.error("env.digits", e))?,
                None => DigitMode::SeededPrf,
            };
            let key = cfg.u64_or("env.digit_key", seed)?;
            let offset = cfg.usize_or("env.digit_offset", 0)?;
            Box::new(PiBetting::new(DigitSource::new(mode, key, offset), seed))
        }
        "easy" => {
            let floor = match cfg.sequence("env.floor")? {
                Some(s) => s,
                None => Sequence::cycle(vec![0.3, 0.7]).map_err(bad)?,
            };
            let faces = match cfg.reals("env.decoy_faces")? {
                Some(v) => DecoyFaces::Fixed(v),
                None => DecoyFaces::Uniform {
                    count: cfg.usize_or("env.decoy_count", 2)?,
                    lo: cfg.real_or("env.decoy_lo", 0.0)?,
                    hi: cfg.real_or("env.decoy_hi", 1.0)?,
                },
            };
            let payoff = match cfg.get("env.decoy_payoff") {
                Some(p) => DecoyPayoff::parse(p).map_err(|e| cfg.error("env.decoy_payoff", e))?,
                None => DecoyPayoff::FaceValue,
            };
            Box::new(
                EasyOptions::new(floor, DecoySpec { faces, payoff }, seed)
                    .map_err(bad)?
                    .labeled(cfg.bool_or("env.labeled", false)?)
                    .with_bonus(cfg.bool_or("env.bonus", false)?),
            )
        }
        "lottery" => {
            let mean = match cfg.sequence("env.mean")? {
                Some(s) => s,
                None => Sequence::constant(0.6).map_err(bad)?,
            };
            let dist = match cfg.get("env.dist").unwrap_or("bernoulli") {
                "bernoulli" => LotteryDist::Bernoulli,
                "uniform" => LotteryDist::UniformAroundMean {
                    half_width: cfg.real_or("env.half_width", 0.1)?,
                },
                other => {
                    return Err(cfg.error(
                        "env.dist",
                        format!("unknown lottery distribution `{other}`"),
                    ))
                }
            };
            Box::new(Lottery::new(mean, dist, cfg.sequence("env.alt")?, seed).map_err(bad)?)
        }
        "newcomb" => Box::new(Newcomb::new()),
        "loe" => Box::new(LoeDemo::new(cfg.usize_or("env.size", 4)?, seed).map_err(bad)?),
        "product" => {
            let list = cfg.require("env.factors")?;
            let factors = list
                .split(',')
                .enumerate()
                .map(|(k, name)| {
                    factor(name.trim(), seed.wrapping_add(k as u64))
                        .map_err(|m| cfg.error("env.factors", m))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Box::new(ProductEnvironment::new(factors).map_err(|e| cfg.error("env.factors", e))?)
        }
        other => return Err(cfg.error("env.kind", format!("unknown environment `{other}`"))),
    })
}

/// Product factors take their default parameters.
fn factor(kind: &str, seed: u64) -> Result<Box<dyn Environment>, String> {
    let s = |e: bria::Error| e.to_string();
    Ok(match kind {
        "sao" => Box::new(Sao::new()),
        "pi" => Box::new(PiBetting::new(DigitSource::seeded(seed), seed)),
        "easy" => Box::new(
            EasyOptions::new(
                Sequence::cycle(vec![0.3, 0.7]).map_err(s)?,
                DecoySpec::default(),
                seed,
            )
            .map_err(s)?,
        ),
        "lottery" => Box::new(
            Lottery::new(
                Sequence::constant(0.6).map_err(s)?,
                LotteryDist::Bernoulli,
                Some(Sequence::constant(0.4).map_err(s)?),
                seed,
            )
            .map_err(s)?,
        ),
        "newcomb" => Box::new(Newcomb::new()),
        "loe" => Box::new(LoeDemo::new(4, seed).map_err(s)?),
        other => return Err(format!("unknown factor `{other}`")),
    })
}

/// Reads `key` (a registry path); other `registry.*` keys become `$name`
/// parameters.
pub fn registry(cfg: &Config, key: &str) -> Result<Vec<Hypothesis>, CliError> {
    let path = cfg.resolve(key)?;
    let text = std::fs::read_to_string(&path).map_err(|e| cfg.error(key, e))?;
    let params = cfg.params("registry", &["path", "player1", "player2"]);
    parse_registry(&text, &params)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn horizon(cfg: &Config) -> Result<usize, CliError> {
    let t = cfg.usize_or("agent.horizon", 0)?;
    if t == 0 {
        return Err(cfg.error("agent.horizon", "horizon must be ≥ 1"));
    }
    Ok(t)
}

pub fn schedule(cfg: &Config) -> Result<Schedule, CliError> {
    match cfg.get("agent.schedule") {
        Some(s) => Schedule::parse(s).map_err(|e| cfg.error("agent.schedule", e)),
        None => Ok(Schedule::Harmonic),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentKind {
    Auction,
    Fixed,
    BiasedTester,
}

pub fn agent_kind(cfg: &Config) -> Result<AgentKind, CliError> {
    match cfg.get("agent.kind").unwrap_or("auction") {
        "auction" => Ok(AgentKind::Auction),
        "fixed" => Ok(AgentKind::Fixed),
        "biased_tester" => Ok(AgentKind::BiasedTester),
        "scripted_folk" => Err(cfg.error(
            "agent.kind",
            "folk agents run through `bria game --mode folk`",
        )),
        other => Err(cfg.error("agent.kind", format!("unknown agent `{other}`"))),
    }
}

/// Agents other than the auction.
pub fn plain_agent(cfg: &Config, kind: AgentKind) -> Result<Box<dyn Agent>, CliError> {
    match kind {
        AgentKind::Fixed => {
            let policy = FixedPolicy::parse(cfg.get("agent.policy").unwrap_or("first"))
                .map_err(|e| cfg.error("agent.policy", e))?;
            let estimate = cfg.real_or("agent.estimate", 0.0)?;
            Ok(Box::new(
                FixedAgent::new(policy, estimate).map_err(|e| cfg.error("agent.estimate", e))?,
            ))
        }
        AgentKind::BiasedTester => Ok(Box::new(
            BiasedTester::new(cfg.usize_or("agent.test_every", 10)?)
                .map_err(|e| cfg.error("agent.test_every", e))?,
        )),
        AgentKind::Auction => unreachable!("the auction is driven by run_bria"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSettings {
    pub tail: f64,
    /// `None` means `auto`.
    pub margin: Option<f64>,
}

impl AuditSettings {
    /// `auto` resolves to `auto_margin`.
    pub fn params(&self, auto_margin: f64) -> AuditParams {
        AuditParams {
            tail_fraction: self.tail,
            divergence_margin: self.margin.unwrap_or(auto_margin),
        }
    }

    pub fn parse(tail: f64, margin: &str) -> Result<Self, String> {
        let margin = match margin {
            "auto" => None,
            m => Some(bria::numeric::parse_real(m).map_err(|e| e.to_string())?),
        };
        let s = Self { tail, margin };
        s.params(1.0).validate().map_err(|e| e.to_string())?;
        Ok(s)
    }
}

/// `audit.tail` (default 0.5) and `audit.margin` (`auto` or a number).
pub fn audit_settings(cfg: &Config) -> Result<AuditSettings, CliError> {
    let tail = cfg.real_or("audit.tail", 0.5)?;
    let margin = cfg.get("audit.margin").unwrap_or("auto");
    AuditSettings::parse(tail, margin).map_err(|m| {
        let key = if cfg.contains("audit.margin") {
            "audit.margin"
        } else {
            "audit.tail"
        };
        cfg.error(key, m)
    })
}

/// `output.dir`, defaulting to `out/<config stem>`.
pub fn output_dir(cfg: &Config) -> std::path::PathBuf {
    match cfg.get("output.dir") {
        Some(d) => d.into(),
        None => {
            let stem = cfg
                .path()
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run");
            std::path::Path::new("out").join(stem)
        }
    }
}
