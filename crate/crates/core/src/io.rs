//! CSV artifacts: traces, hypothesis logs, ledgers and randomness
//! trajectories. Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::auction::BriaRun;
use crate::error::{Error, Result};
use crate::randomness::DeviationPoint;
use crate::trace::{AgentStep, DecisionProblem, OptionToken, Round, RoundSet, Trace};

/// Columns `t, option_id, estimate, reward`.
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "option_id", "estimate", "reward"])?;
    for (k, r) in trace.rounds().iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            r.choice().id().to_string(),
            r.estimate().to_string(),
            r.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, hypothesis_id, recommendation_id, promise, tested`.
pub fn write_hypotheses_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "hypothesis_id",
        "recommendation_id",
        "promise",
        "tested",
    ])?;
    for t in 1..=trace.len() {
        for log in trace.logs() {
            let h = log.at(t);
            w.write_record([
                t.to_string(),
                log.id().to_string(),
                h.choice().id().to_string(),
                h.estimate().to_string(),
                u8::from(log.tested().contains(&t)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, hypothesis_id, wealth, allowance_cum, tested, record_on_testset`,
/// post-settlement.
pub fn write_ledger_csv<W: Write>(run: &BriaRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "hypothesis_id",
        "wealth",
        "allowance_cum",
        "tested",
        "record_on_testset",
    ])?;
    for (k, snap) in run.snapshots.iter().enumerate() {
        let t = k + 1;
        for (i, log) in run.trace.logs().iter().enumerate() {
            w.write_record([
                t.to_string(),
                log.id().to_string(),
                snap.wealth[i].to_string(),
                snap.allowance[i].to_string(),
                u8::from(log.tested().contains(&t)).to_string(),
                snap.record[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `T, count, sum, average`.
pub fn write_deviation_csv<W: Write>(points: &[DeviationPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "count", "sum", "average"])?;
    for p in points {
        w.write_record([
            p.t.to_string(),
            p.count.to_string(),
            p.sum.to_string(),
            p.average.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, capital`, starting from `t = 0`.
pub fn write_capital_csv<W: Write>(trajectory: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "capital"])?;
    for (t, c) in trajectory.iter().enumerate() {
        w.write_record([t.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn field(rec: &csv::StringRecord, k: usize, line: usize) -> Result<&str> {
    rec.get(k)
        .ok_or_else(|| Error::parse(line, format!("missing column {}", k + 1)))
}

fn number<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T> {
    let s = field(rec, k, line)?;
    s.parse()
        .map_err(|_| Error::parse(line, format!("column {}: `{s}` is not a number", k + 1)))
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    Ok(())
}

/// Reads the two CSVs written by [`write_trace_csv`] and
/// [`write_hypotheses_csv`]. Each round's problem is rebuilt from the chosen
/// option and the recommendations, as untagged tokens.
pub fn read_trace<R1: Read, R2: Read>(trace_csv: R1, hypotheses_csv: R2) -> Result<Trace> {
    let mut rdr = csv::Reader::from_reader(trace_csv);
    check_header(&mut rdr, &["t", "option_id", "estimate", "reward"])?;
    let mut steps: Vec<(String, f64, f64)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let t: usize = number(&rec, 0, line)?;
        if t != steps.len() + 1 {
            return Err(Error::parse(
                line,
                format!("expected round {}, found {t}", steps.len() + 1),
            ));
        }
        steps.push((
            field(&rec, 1, line)?.to_string(),
            number(&rec, 2, line)?,
            number(&rec, 3, line)?,
        ));
    }

    let mut rdr = csv::Reader::from_reader(hypotheses_csv);
    check_header(
        &mut rdr,
        &[
            "t",
            "hypothesis_id",
            "recommendation_id",
            "promise",
            "tested",
        ],
    )?;
    let mut order: Vec<String> = Vec::new();
    let mut logs: BTreeMap<String, (Vec<(String, f64)>, RoundSet)> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let t: usize = number(&rec, 0, line)?;
        let id = field(&rec, 1, line)?.to_string();
        let entry = logs.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (Vec::new(), RoundSet::new())
        });
        if t != entry.0.len() + 1 {
            return Err(Error::parse(
                line,
                format!(
                    "hypothesis `{id}`: expected round {}, found {t}",
                    entry.0.len() + 1
                ),
            ));
        }
        entry
            .0
            .push((field(&rec, 2, line)?.to_string(), number(&rec, 3, line)?));
        match field(&rec, 4, line)? {
            "1" => {
                entry.1.insert(t);
            }
            "0" => {}
            other => {
                return Err(Error::parse(
                    line,
                    format!("tested must be 0 or 1, found `{other}`"),
                ))
            }
        }
    }

    let token = |id: &str| OptionToken::new(id, id);
    let mut rounds = Vec::with_capacity(steps.len());
    for (k, (choice, estimate, reward)) in steps.iter().enumerate() {
        let mut options = vec![token(choice)];
        for id in &order {
            let rec = &logs[id]
                .0
                .get(k)
                .ok_or_else(|| {
                    Error::Structure(format!("hypothesis `{id}` has no row for round {}", k + 1))
                })?
                .0;
            if !options.iter().any(|o| o.id() == rec) {
                options.push(token(rec));
            }
        }
        rounds.push(Round {
            problem: DecisionProblem::new(options)?,
            step: AgentStep::new(token(choice), *estimate)?,
            reward: *reward,
        });
    }
    let parts = order
        .iter()
        .map(|id| {
            let (outs, tested) = &logs[id];
            let outputs = outs
                .iter()
                .map(|(rec, p)| AgentStep::new(token(rec), *p))
                .collect::<Result<Vec<_>>>()?;
            Ok((id.clone(), outputs, tested.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Trace::from_parts(rounds, parts)
}

/// `allowance_cum` from a file written by [`write_ledger_csv`]: the
/// hypothesis ids in file order and one row per round.
pub fn read_allowance<R: Read>(ledger_csv: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(ledger_csv);
    check_header(
        &mut rdr,
        &[
            "t",
            "hypothesis_id",
            "wealth",
            "allowance_cum",
            "tested",
            "record_on_testset",
        ],
    )?;
    let mut ids: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let t: usize = number(&rec, 0, line)?;
        if t == 0 || t > rows.len() + 1 {
            return Err(Error::parse(line, format!("round {t} out of order")));
        }
        if t > rows.len() {
            if rows.last().is_some_and(|r| r.len() != ids.len()) {
                return Err(Error::parse(line, format!("round {} is incomplete", t - 1)));
            }
            rows.push(Vec::new());
        }
        let id = rec.get(1).unwrap_or_default();
        let row = rows.last_mut().expect("pushed above");
        if t == 1 {
            ids.push(id.to_string());
        } else if ids.get(row.len()).map(String::as_str) != Some(id) {
            return Err(Error::parse(line, format!("unexpected hypothesis `{id}`")));
        }
        row.push(number(&rec, 3, line)?);
    }
    if rows.last().is_some_and(|r| r.len() != ids.len()) {
        return Err(Error::parse(rows.len(), "last round is incomplete"));
    }
    Ok((ids, rows))
}
