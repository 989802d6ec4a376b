//! Boundedly rational inductive agents.
//!
//! Exact rationality metrics over run traces, the hypothesis auction that
//! satisfies them, and a library of environments, hypothesis families,
//! two-player games and randomness checks to exercise it.

pub mod agent;
pub mod auction;
pub mod environments;
pub mod error;
pub mod game;
pub mod hypotheses;
pub mod io;
pub mod metrics;
pub mod numeric;
pub mod randomness;
pub mod summary;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{AgentStep, DecisionProblem, OptionToken, Round, RoundSet, Trace};
