//! Per-robot chain-exchange state machine and the round-synchronous driver
//! that runs a team of them to agreement.
//!
//! Each round an agent receives, adopts a better advertised solution,
//! extends buffered chains with its own switches, and broadcasts. See
//! [`AgentState::round`].

mod agent;
mod driver;
mod message;
mod stats;
mod warm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coalition::CoalitionError;
use crate::netsim::NetError;
use crate::Scalar;

pub use agent::{init_agent, AgentState};
pub use driver::{default_buffer_cap, run_to_convergence, Solution};
pub use message::{outranks, Advert, ChainMessage, Message};
pub use stats::{RoundRecord, RunStats, RunSummary};
pub use warm::{greedy_marginal, Heuristic, InitPolicy, KPolicy, Proposal, WarmStart};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct EngineConfig<S> {
    /// Minimum gain for a local solution to replace the best.
    pub epsilon: S,
    /// Rounds without change every agent needs before the run stops.
    pub quiescence_rounds: usize,
    pub max_rounds: usize,
    /// Per-agent buffer limit; `None` uses [`default_buffer_cap`].
    pub buffer_cap: Option<usize>,
    pub rng_seed: u64,
}

impl<S: Scalar> Default for EngineConfig<S> {
    fn default() -> Self {
        Self {
            epsilon: S::lit(1e-9),
            quiescence_rounds: 3,
            max_rounds: 500,
            buffer_cap: None,
            rng_seed: 0,
        }
    }
}

impl<S: Scalar> EngineConfig<S> {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !self.epsilon.is_finite() || self.epsilon < S::zero() {
            return Err(EngineError::Config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if self.quiescence_rounds == 0 {
            return Err(EngineError::Config("quiescence_rounds must be >= 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(EngineError::Config("max_rounds must be >= 1".into()));
        }
        if self.buffer_cap == Some(0) {
            return Err(EngineError::Config("buffer_cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Coalition(#[from] CoalitionError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid engine config: {0}")]
    Config(String),
}

/// True iff every agent has been quiet long enough and all hold the same
/// best assignment.
pub fn check_terminated<S: Scalar>(states: &[AgentState<S>], cfg: &EngineConfig<S>) -> bool {
    let Some(first) = states.first() else {
        return true;
    };
    states
        .iter()
        .all(|st| st.quiet_rounds >= cfg.quiescence_rounds && *st.best == *first.best)
}
