use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Team snapshot after one round. Round 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RoundRecord<S> {
    pub round: usize,
    /// Envelopes sent this round, adverts included.
    pub messages: u64,
    pub chain_messages: u64,
    pub max_utility: S,
    pub mean_utility: S,
    /// `ρ(ν*_i)` per robot.
    pub best_utilities: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RunStats<S> {
    pub rounds_to_converge: usize,
    pub total_messages: u64,
    pub chain_messages: u64,
    pub utility_trace: Vec<RoundRecord<S>>,
    pub improvements_per_agent: Vec<usize>,
    pub evictions: usize,
    pub dropped_messages: u64,
    pub initial_utility: S,
    pub final_utility: S,
    pub converged: bool,
    pub components: usize,
    pub passes: usize,
}

/// [`RunStats`] without the per-round trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RunSummary<S> {
    pub rounds_to_converge: usize,
    pub total_messages: u64,
    pub chain_messages: u64,
    pub improvements_per_agent: Vec<usize>,
    pub evictions: usize,
    pub dropped_messages: u64,
    pub initial_utility: S,
    pub final_utility: S,
    pub converged: bool,
    pub components: usize,
    pub passes: usize,
}

impl<S: Scalar> RunStats<S> {
    pub fn summary(&self) -> RunSummary<S> {
        RunSummary {
            rounds_to_converge: self.rounds_to_converge,
            total_messages: self.total_messages,
            chain_messages: self.chain_messages,
            improvements_per_agent: self.improvements_per_agent.clone(),
            evictions: self.evictions,
            dropped_messages: self.dropped_messages,
            initial_utility: self.initial_utility,
            final_utility: self.final_utility,
            converged: self.converged,
            components: self.components,
            passes: self.passes,
        }
    }

    /// One JSON object per round, newline separated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.utility_trace {
            out.push_str(&serde_json::to_string(rec).expect("round record serializes"));
            out.push('\n');
        }
        out
    }
}
