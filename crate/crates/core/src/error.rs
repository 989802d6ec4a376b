use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("round {t} out of range (trace has {len} rounds)")]
    Range { t: usize, len: usize },

    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),

    #[error("invalid test set for `{hypothesis}`: round {round} choice `{choice}` differs from recommendation `{recommendation}`")]
    InvalidTestSet {
        hypothesis: String,
        round: usize,
        choice: String,
        recommendation: String,
    },

    #[error("option `{option}` is not a member of the round {round} problem")]
    Membership { round: usize, option: String },

    #[error("invalid value: {0}")]
    Value(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("auction consistency violated: {0}")]
    Consistency(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("environment failed at round {round}: {source}")]
    Environment {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn value(msg: impl Into<String>) -> Self {
        Error::Value(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub(crate) fn unit_interval(what: &str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::value(format!("{what} = {x} outside [0,1]")))
    }
}
