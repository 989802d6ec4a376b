//! Compensated summation and round-indexed real sequences.

use crate::error::{unit_interval, Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// A map from 1-based round index to a value in [0,1].
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    Constant(f64),
    /// `values[(t - 1) % len]`
    Cycle(Vec<f64>),
}

impl Sequence {
    pub fn constant(v: f64) -> Result<Self> {
        unit_interval("sequence value", v)?;
        Ok(Sequence::Constant(v))
    }

    pub fn cycle(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("cycle sequence".into()));
        }
        for &v in &values {
            unit_interval("sequence value", v)?;
        }
        Ok(if values.len() == 1 {
            Sequence::Constant(values[0])
        } else {
            Sequence::Cycle(values)
        })
    }

    pub fn at(&self, t: usize) -> f64 {
        match self {
            Sequence::Constant(v) => *v,
            Sequence::Cycle(vs) => vs[t.saturating_sub(1) % vs.len()],
        }
    }

    /// Parses `0.5` or `0.3,0.7`; also accepts fractions like `2/3`.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|s| parse_real(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        Sequence::cycle(values)
    }
}

/// Parses a decimal or a simple fraction `p/q`.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::value(format!("`{s}` is not a number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| bad())?;
        let q: f64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0.0 {
            return Err(bad());
        }
        Ok(p / q)
    } else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    }
}
