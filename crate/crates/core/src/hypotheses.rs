//! Hypothesis families and the registry file format.
//!
//! A hypothesis maps (round, public history, current problem) to a
//! recommendation and a promise, using the same [`AgentStep`] shape as an
//! agent.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::agent::{FixedAgent, FixedPolicy};
use crate::error::{unit_interval, Error, Result};
use crate::numeric::{parse_real, Sequence};
use crate::trace::{AgentStep, DecisionProblem, OptionToken, Round};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypothesisKind {
    Constant,
    FaceValue,
    Margin,
    Guarantee,
    MeanMargin,
    Diagonal,
    Scripted,
}

impl HypothesisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HypothesisKind::Constant => "CONSTANT",
            HypothesisKind::FaceValue => "FACE_VALUE",
            HypothesisKind::Margin => "MARGIN",
            HypothesisKind::Guarantee => "GUARANTEE",
            HypothesisKind::MeanMargin => "MEAN_MARGIN",
            HypothesisKind::Diagonal => "DIAGONAL",
            HypothesisKind::Scripted => "SCRIPTED",
        }
    }
}

impl fmt::Display for HypothesisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Simulates an agent from the public history, for diagonalization.
pub type AgentFn =
    Arc<dyn Fn(usize, &[Round], &DecisionProblem) -> Result<AgentStep> + Send + Sync>;

#[derive(Clone)]
enum Rule {
    Constant {
        tag: String,
        promise: f64,
    },
    FaceValue,
    Margin {
        tag: String,
        promise: f64,
    },
    Guarantee {
        tag: String,
        floor: Sequence,
    },
    MeanMargin {
        tag: String,
        mean: Sequence,
        eps: f64,
    },
    Diagonal(AgentFn),
    Scripted {
        tags: Vec<String>,
        promises: Sequence,
    },
    Lifted {
        inner: Box<Hypothesis>,
        factor: usize,
    },
}

#[derive(Clone)]
pub struct Hypothesis {
    id: String,
    rule: Rule,
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypothesis")
            .field("id", &self.id)
            .field("kind", &self.kind())
            .finish()
    }
}

fn tagged_or_first<'a>(problem: &'a DecisionProblem, tag: &str) -> &'a OptionToken {
    problem.find_tag(tag).unwrap_or_else(|| problem.first())
}

fn tagged<'a>(t: usize, problem: &'a DecisionProblem, tag: &str) -> Result<&'a OptionToken> {
    problem.find_tag(tag).ok_or_else(|| Error::Membership {
        round: t,
        option: format!("tag:{tag}"),
    })
}

impl Hypothesis {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> HypothesisKind {
        match &self.rule {
            Rule::Constant { .. } => HypothesisKind::Constant,
            Rule::FaceValue => HypothesisKind::FaceValue,
            Rule::Margin { .. } => HypothesisKind::Margin,
            Rule::Guarantee { .. } => HypothesisKind::Guarantee,
            Rule::MeanMargin { .. } => HypothesisKind::MeanMargin,
            Rule::Diagonal(_) => HypothesisKind::Diagonal,
            Rule::Scripted { .. } => HypothesisKind::Scripted,
            Rule::Lifted { inner, .. } => inner.kind(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Recommendation and promise for round `t`.
    pub fn advise(
        &self,
        t: usize,
        history: &[Round],
        problem: &DecisionProblem,
    ) -> Result<AgentStep> {
        match &self.rule {
            Rule::Constant { tag, promise } | Rule::Margin { tag, promise } => {
                AgentStep::new(tagged_or_first(problem, tag).clone(), *promise)
            }
            Rule::FaceValue => match problem.max_face() {
                Some((o, v)) => AgentStep::new(o.clone(), v),
                None => AgentStep::new(problem.first().clone(), 0.0),
            },
            Rule::Guarantee { tag, floor } => {
                AgentStep::new(tagged(t, problem, tag)?.clone(), floor.at(t))
            }
            Rule::MeanMargin { tag, mean, eps } => AgentStep::new(
                tagged(t, problem, tag)?.clone(),
                (mean.at(t) - eps).max(0.0),
            ),
            Rule::Diagonal(agent) => {
                let predicted = agent(t, history, problem)?;
                let other = problem
                    .options()
                    .iter()
                    .find(|o| o.id() != predicted.choice().id());
                match other {
                    Some(o) if problem.len() >= 2 && predicted.estimate() < 1.0 => {
                        AgentStep::new(o.clone(), 1.0)
                    }
                    _ => AgentStep::new(problem.first().clone(), 0.0),
                }
            }
            Rule::Scripted { tags, promises } => {
                let tag = &tags[(t - 1) % tags.len()];
                AgentStep::new(tagged_or_first(problem, tag).clone(), promises.at(t))
            }
            Rule::Lifted { inner, factor } => {
                let mut components: Vec<OptionToken> = Vec::new();
                for o in problem.options() {
                    let c = o.factors().get(factor - 1).ok_or_else(|| {
                        Error::Structure(format!(
                            "round {t}: option `{}` lacks factor {factor}",
                            o.id()
                        ))
                    })?;
                    if !components.iter().any(|q| q.id() == c.id()) {
                        components.push(c.clone());
                    }
                }
                let step = inner.advise(t, &[], &DecisionProblem::new(components)?)?;
                let lifted = problem
                    .options()
                    .iter()
                    .find(|o| o.factors()[factor - 1].id() == step.choice().id())
                    .ok_or_else(|| Error::Membership {
                        round: t,
                        option: step.choice().id().to_string(),
                    })?;
                AgentStep::new(lifted.clone(), step.estimate())
            }
        }
    }
}

/// Recommends the first option tagged `tag` (else the first option) and
/// promises `promise` every round.
pub fn const_hypothesis(
    id: impl Into<String>,
    tag: impl Into<String>,
    promise: f64,
) -> Result<Hypothesis> {
    unit_interval("promise", promise)?;
    Ok(Hypothesis {
        id: id.into(),
        rule: Rule::Constant {
            tag: tag.into(),
            promise,
        },
    })
}

/// Recommends the option with the largest face value and promises it.
pub fn face_value_hypothesis(id: impl Into<String>) -> Hypothesis {
    Hypothesis {
        id: id.into(),
        rule: Rule::FaceValue,
    }
}

/// Recommends the tagged option and promises `base − eps`.
pub fn margin_hypothesis(
    id: impl Into<String>,
    tag: impl Into<String>,
    base: f64,
    eps: f64,
) -> Result<Hypothesis> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::parameter(format!(
            "margin eps = {eps} must be positive"
        )));
    }
    let promise = base - eps;
    if !(0.0..=1.0).contains(&promise) {
        return Err(Error::parameter(format!(
            "base − eps = {promise} outside [0,1]"
        )));
    }
    Ok(Hypothesis {
        id: id.into(),
        rule: Rule::Margin {
            tag: tag.into(),
            promise,
        },
    })
}

/// Recommends the tagged option and promises the floor `l(t)`. A problem
/// without that tag is a membership error.
pub fn guarantee_hypothesis(
    id: impl Into<String>,
    tag: impl Into<String>,
    floor: Sequence,
) -> Hypothesis {
    Hypothesis {
        id: id.into(),
        rule: Rule::Guarantee {
            tag: tag.into(),
            floor,
        },
    }
}

/// Recommends the tagged option and promises `max(μ(t) − eps, 0)`.
pub fn mean_margin_hypothesis(
    id: impl Into<String>,
    tag: impl Into<String>,
    mean: Sequence,
    eps: f64,
) -> Result<Hypothesis> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::parameter(format!(
            "mean margin eps = {eps} must be positive"
        )));
    }
    Ok(Hypothesis {
        id: id.into(),
        rule: Rule::MeanMargin {
            tag: tag.into(),
            mean,
            eps,
        },
    })
}

/// Predicts the agent with `agent` and, unless the prediction estimates 1
/// or the problem is a singleton, recommends the first other option with
/// promise 1.
pub fn make_diagonalizer(id: impl Into<String>, agent: AgentFn) -> Hypothesis {
    Hypothesis {
        id: id.into(),
        rule: Rule::Diagonal(agent),
    }
}

/// Diagonalizer against a [`FixedAgent`].
pub fn diagonalize_fixed(id: impl Into<String>, agent: FixedAgent) -> Hypothesis {
    make_diagonalizer(
        id,
        Arc::new(move |t, history, problem| agent.step(t, history, problem)),
    )
}

/// Cycles through `tags` round by round with promises from `promises`.
pub fn scripted_hypothesis(
    id: impl Into<String>,
    tags: Vec<String>,
    promises: Sequence,
) -> Result<Hypothesis> {
    if tags.is_empty() {
        return Err(Error::Empty("scripted tag list".into()));
    }
    Ok(Hypothesis {
        id: id.into(),
        rule: Rule::Scripted { tags, promises },
    })
}

/// Lifts a hypothesis over factor problems to product problems: it is
/// evaluated on the `factor`-th (1-based) component problem and its
/// recommendation is extended by the first matching tuple. The inner
/// hypothesis sees no history.
pub fn lift_hypothesis(inner: Hypothesis, factor: usize) -> Result<Hypothesis> {
    if factor == 0 {
        return Err(Error::parameter("factor index is 1-based"));
    }
    Ok(Hypothesis {
        id: inner.id.clone(),
        rule: Rule::Lifted {
            inner: Box::new(inner),
            factor,
        },
    })
}

fn substitute<'a>(
    value: &'a str,
    params: &'a HashMap<String, String>,
    line: usize,
) -> Result<&'a str> {
    match value.strip_prefix('$') {
        Some(name) => params
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(line, format!("undefined parameter `${name}`"))),
        None => Ok(value),
    }
}

/// Parses a registry: one hypothesis per line, `id kind key=value ...`.
/// Blank lines and `#` comments are skipped; values of the form `$name`
/// are looked up in `params`.
///
/// ```text
/// h_a0  constant    tag=a0 promise=0.5
/// h_x   face_value
/// h_pi  margin      tag=a_pi base=0.5 eps=$eps
/// h_g   guarantee   tag=guaranteed L=0.3,0.7
/// h_mu  mean_margin tag=lottery mu=0.6 eps=0.05
/// diag  diagonal    policy=first estimate=0.4
/// s     scripted    tags=a,b promises=0.1,0.2
/// l     constant    tag=a0 promise=0.5 factor=1
/// ```
///
/// `factor=k` lifts the hypothesis to the `k`-th factor of a product
/// environment.
pub fn parse_registry(text: &str, params: &HashMap<String, String>) -> Result<Vec<Hypothesis>> {
    let mut out: Vec<Hypothesis> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let id = words.next().unwrap_or_default();
        let kind = words
            .next()
            .ok_or_else(|| Error::parse(line, format!("hypothesis `{id}` has no kind")))?;
        let mut kv: HashMap<&str, &str> = HashMap::new();
        for w in words {
            let (key, value) = w
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, found `{w}`")))?;
            kv.insert(key, substitute(value, params, line)?);
        }
        if out.iter().any(|h| h.id == id) {
            return Err(Error::parse(
                line,
                format!("duplicate hypothesis id `{id}`"),
            ));
        }
        let h = build(id, kind, &kv).and_then(|h| match kv.get("factor") {
            Some(f) => {
                let factor = f
                    .parse()
                    .map_err(|_| Error::parameter(format!("factor `{f}` is not an index")))?;
                lift_hypothesis(h, factor)
            }
            None => Ok(h),
        });
        let h = h.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::parse(line, other.to_string()),
        })?;
        out.push(h);
    }
    if out.is_empty() {
        return Err(Error::Empty("registry".into()));
    }
    Ok(out)
}

fn build(id: &str, kind: &str, kv: &HashMap<&str, &str>) -> Result<Hypothesis> {
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| Error::parameter(format!("`{kind}` needs `{key}=`")))
    };
    let real = |key: &str| get(key).and_then(parse_real);
    match kind {
        "constant" | "const" => const_hypothesis(id, get("tag")?, real("promise")?),
        "face_value" => Ok(face_value_hypothesis(id)),
        "margin" => margin_hypothesis(id, get("tag")?, real("base")?, real("eps")?),
        "guarantee" => Ok(guarantee_hypothesis(
            id,
            get("tag")?,
            Sequence::parse(get("L")?)?,
        )),
        "mean_margin" => {
            mean_margin_hypothesis(id, get("tag")?, Sequence::parse(get("mu")?)?, real("eps")?)
        }
        "diagonal" => {
            let policy = FixedPolicy::parse(kv.get("policy").copied().unwrap_or("first"))?;
            let estimate = kv
                .get("estimate")
                .map(|v| parse_real(v))
                .transpose()?
                .unwrap_or(0.0);
            Ok(diagonalize_fixed(id, FixedAgent::new(policy, estimate)?))
        }
        "scripted" => scripted_hypothesis(
            id,
            get("tags")?.split(',').map(str::to_string).collect(),
            Sequence::parse(get("promises")?)?,
        ),
        other => Err(Error::parameter(format!(
            "unknown hypothesis kind `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sao() -> DecisionProblem {
        DecisionProblem::new(vec![
            OptionToken::numeric("a0", "a0", 0.5).unwrap(),
            OptionToken::new("a1", "a1"),
        ])
        .unwrap()
    }

    fn numeric(faces: &[f64]) -> DecisionProblem {
        DecisionProblem::new(
            faces
                .iter()
                .enumerate()
                .map(|(k, &v)| OptionToken::numeric(format!("o{k}"), "num", v).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_recommends_tag_or_first() {
        let h = const_hypothesis("h", "a1", 0.5).unwrap();
        let s = h.advise(1, &[], &sao()).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("a1", 0.5));
        let h = const_hypothesis("h", "missing", 0.3).unwrap();
        let s = h.advise(1, &[], &sao()).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("a0", 0.3));
        assert!(const_hypothesis("h", "a0", 1.5).is_err());
    }

    #[test]
    fn face_value_max_and_fallback() {
        let h = face_value_hypothesis("x");
        let s = h.advise(1, &[], &numeric(&[0.2, 0.9])).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("o1", 0.9));
        let plain = DecisionProblem::new(vec![OptionToken::new("p", "p")]).unwrap();
        let s = h.advise(1, &[], &plain).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("p", 0.0));
    }

    #[test]
    fn margin_promises() {
        let h = margin_hypothesis("m", "a_pi", 0.5, 0.1).unwrap();
        let p = DecisionProblem::new(vec![OptionToken::new("pi", "a_pi")]).unwrap();
        assert!((h.advise(3, &[], &p).unwrap().estimate() - 0.4).abs() < 1e-15);
        assert_eq!(
            margin_hypothesis("m", "a", 0.5, 0.5)
                .unwrap()
                .advise(1, &[], &p)
                .unwrap()
                .estimate(),
            0.0
        );
        assert!(margin_hypothesis("m", "a", 0.5, 0.6).is_err());
        assert!(margin_hypothesis("m", "a", 0.5, 0.0).is_err());
    }

    #[test]
    fn guarantee_and_mean_margin() {
        let g = guarantee_hypothesis("g", "a0", Sequence::Constant(0.5));
        assert_eq!(g.advise(1, &[], &sao()).unwrap().estimate(), 0.5);
        let g = guarantee_hypothesis("g", "nope", Sequence::Constant(0.5));
        assert!(matches!(
            g.advise(4, &[], &sao()),
            Err(Error::Membership { round: 4, .. })
        ));
        let m = mean_margin_hypothesis("m", "a0", Sequence::Constant(0.05), 0.1).unwrap();
        assert_eq!(m.advise(1, &[], &sao()).unwrap().estimate(), 0.0);
        let m = mean_margin_hypothesis("m", "a0", Sequence::Constant(0.5), 0.1).unwrap();
        assert!((m.advise(1, &[], &sao()).unwrap().estimate() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn diagonalizer_rules() {
        let d = diagonalize_fixed("d", FixedAgent::new(FixedPolicy::First, 0.4).unwrap());
        let s = d.advise(1, &[], &sao()).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("a1", 1.0));
        let d = diagonalize_fixed("d", FixedAgent::new(FixedPolicy::First, 1.0).unwrap());
        assert_eq!(d.advise(1, &[], &sao()).unwrap().estimate(), 0.0);
        let d = diagonalize_fixed("d", FixedAgent::new(FixedPolicy::First, 0.0).unwrap());
        let single = DecisionProblem::new(vec![OptionToken::new("a", "a")]).unwrap();
        assert_eq!(d.advise(1, &[], &single).unwrap().estimate(), 0.0);
    }

    #[test]
    fn scripted_cycles() {
        let s = scripted_hypothesis(
            "s",
            vec!["a0".into(), "a1".into()],
            Sequence::parse("0.1,0.2").unwrap(),
        )
        .unwrap();
        assert_eq!(s.advise(1, &[], &sao()).unwrap().choice().id(), "a0");
        let r = s.advise(2, &[], &sao()).unwrap();
        assert_eq!((r.choice().id(), r.estimate()), ("a1", 0.2));
    }

    #[test]
    fn lifted_extends_with_first_tuple() {
        let p = DecisionProblem::new(vec![
            OptionToken::product(vec![OptionToken::new("a", "a"), OptionToken::new("c", "c")]),
            OptionToken::product(vec![OptionToken::new("a", "a"), OptionToken::new("d", "d")]),
            OptionToken::product(vec![OptionToken::new("b", "b"), OptionToken::new("c", "c")]),
            OptionToken::product(vec![OptionToken::new("b", "b"), OptionToken::new("d", "d")]),
        ])
        .unwrap();
        let h = lift_hypothesis(const_hypothesis("h", "d", 0.3).unwrap(), 2).unwrap();
        let s = h.advise(1, &[], &p).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("a|d", 0.3));
    }

    #[test]
    fn registry_parsing() {
        let text = "# demo\nh0 constant tag=a0 promise=0.5\nhx face_value  # trailing\n\nm margin tag=a_pi base=0.5 eps=$eps\n";
        let params = HashMap::from([("eps".to_string(), "0.05".to_string())]);
        let reg = parse_registry(text, &params).unwrap();
        assert_eq!(
            reg.iter().map(|h| h.id()).collect::<Vec<_>>(),
            ["h0", "hx", "m"]
        );
        assert_eq!(reg[2].kind(), HypothesisKind::Margin);
    }

    #[test]
    fn registry_errors_carry_line() {
        let e = parse_registry("a face_value\nb bogus\n", &HashMap::new()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_registry("a constant tag=x\n", &HashMap::new()).unwrap_err();
        assert!(e.to_string().contains("promise"), "{e}");
        let e = parse_registry("a margin tag=x base=0.5 eps=$e\n", &HashMap::new()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_registry("a face_value\na face_value\n", &HashMap::new()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_registry("# nothing\n", &HashMap::new()).is_err());
        let e = parse_registry("a face_value factor=0\n", &HashMap::new()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn registry_factor_lifts() {
        let reg =
            parse_registry("l constant tag=a1 promise=0.7 factor=2\n", &HashMap::new()).unwrap();
        let pair = |a: &str, b: &str| {
            OptionToken::product(vec![OptionToken::new(a, a), OptionToken::new(b, b)])
        };
        let p = DecisionProblem::new(vec![pair("x", "a2"), pair("x", "a1")]).unwrap();
        let s = reg[0].advise(1, &[], &p).unwrap();
        assert_eq!((s.choice().id(), s.estimate()), ("x|a1", 0.7));
    }
}
