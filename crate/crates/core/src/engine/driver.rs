use log::{info, warn};

use super::agent::{init_agent, AgentState};
use super::message::{outranks, Message};
use super::stats::{RoundRecord, RunStats};
use super::warm::WarmStart;
use super::{check_terminated, EngineConfig, EngineError};
use crate::coalition::{Assignment, CoalitionStructure, RobotId};
use crate::netsim::{Envelope, NetConfig, NetworkSim, Topology};
use crate::Scalar;

/// Upper bound on block passes over a disconnected team.
const MAX_PASSES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub assignment: Assignment,
    pub utility: S,
    /// False if the round limit cut the run short; `assignment` is then the
    /// best any robot held.
    pub converged: bool,
    /// Whether every robot ended each component run holding the same best.
    pub agreed: bool,
    pub k_indices: Vec<usize>,
    pub stats: RunStats<S>,
    pub warnings: Vec<String>,
}

/// `10 · (N_ω · N_r)^{k_max}`, saturating.
pub fn default_buffer_cap<S: Scalar>(s: &CoalitionStructure<S>) -> usize {
    let base = s.n_tasks().saturating_mul(s.n_robots()).max(1);
    let k_max = s.k_indices().iter().copied().max().unwrap_or(1);
    let exp = u32::try_from(k_max).unwrap_or(u32::MAX);
    base.saturating_pow(exp).saturating_mul(10)
}

/// Runs every robot round-synchronously until they agree and no chain is
/// left to explore, or until `cfg.max_rounds`.
///
/// `warm` chooses `K` and the starting assignment; `previous` is passed to
/// it. A disconnected communication graph is solved one component at a
/// time with the other robots held fixed, repeating until a full pass
/// changes nothing.
pub fn run_to_convergence<S: Scalar>(
    s: &CoalitionStructure<S>,
    net: &NetConfig,
    cfg: &EngineConfig<S>,
    warm: &dyn WarmStart<S>,
    previous: Option<&Assignment>,
) -> Result<Solution<S>, EngineError> {
    cfg.validate()?;
    let proposal = warm.propose(s, previous);
    let mut warnings = proposal.warnings;
    for w in &warnings {
        warn!("{w}");
    }
    let s = s.with_k(proposal.k_indices.clone())?;
    let cap = cfg.buffer_cap.unwrap_or_else(|| default_buffer_cap(&s));
    let comps = s.components();
    if comps.len() > 1 {
        let w = format!(
            "communication graph has {} components, solving them in turn",
            comps.len()
        );
        info!("{w}");
        warnings.push(w);
    }

    let n = s.n_robots();
    let initial_utility = s.mean_utility(&proposal.assignment)?;
    let mut stats = RunStats {
        rounds_to_converge: 0,
        total_messages: 0,
        chain_messages: 0,
        utility_trace: vec![RoundRecord {
            round: 0,
            messages: 0,
            chain_messages: 0,
            max_utility: initial_utility,
            mean_utility: initial_utility,
            best_utilities: vec![initial_utility; n],
        }],
        improvements_per_agent: vec![0; n],
        evictions: 0,
        dropped_messages: 0,
        initial_utility,
        final_utility: initial_utility,
        converged: false,
        components: comps.len(),
        passes: 0,
    };

    let mut runner = Runner {
        s: &s,
        cfg,
        net: *net,
        cap,
        carried: vec![initial_utility; n],
        runs: 0,
    };
    let mut current = proposal.assignment;
    let mut converged = comps.is_empty();
    let mut agreed = true;
    while !comps.is_empty() {
        let mut changed = false;
        let mut all_converged = true;
        agreed = true;
        for comp in &comps {
            let run = runner.run(comp, &current, &mut stats)?;
            changed |= run.best != current;
            all_converged &= run.converged;
            agreed &= run.agreed;
            current = run.best;
        }
        stats.passes += 1;
        if comps.len() == 1 || !changed {
            converged = all_converged;
            break;
        }
        if stats.passes >= MAX_PASSES {
            break;
        }
    }

    let utility = s.mean_utility(&current)?;
    stats.final_utility = utility;
    stats.converged = converged;
    Ok(Solution {
        assignment: current,
        utility,
        converged,
        agreed,
        k_indices: proposal.k_indices,
        stats,
        warnings,
    })
}

struct ComponentRun {
    best: Assignment,
    converged: bool,
    agreed: bool,
}

struct Runner<'a, S> {
    s: &'a CoalitionStructure<S>,
    cfg: &'a EngineConfig<S>,
    net: NetConfig,
    cap: usize,
    /// Last known best utility per robot, for robots outside the running
    /// component.
    carried: Vec<S>,
    runs: u64,
}

impl<S: Scalar> Runner<'_, S> {
    fn run(
        &mut self,
        members: &[RobotId],
        start: &Assignment,
        stats: &mut RunStats<S>,
    ) -> Result<ComponentRun, EngineError> {
        let s = self.s;
        let seed = self.net.rng_seed
            ^ self.cfg.rng_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ self.runs.wrapping_mul(0xD1B5_4A32_D192_ED03);
        self.runs += 1;
        let net_cfg = NetConfig {
            rng_seed: seed,
            ..self.net
        };
        let mut net = NetworkSim::new(Topology::explicit(s.n_robots(), &s.edges()), net_cfg)?;

        let mut agents: Vec<AgentState<S>> = Vec::with_capacity(members.len());
        let mut outboxes: Vec<Vec<Message<S>>> = Vec::with_capacity(members.len());
        for &i in members {
            let (st, out) = init_agent(s, i, start, self.cap)?;
            agents.push(st);
            outboxes.push(out);
        }

        let mut converged = false;
        for _ in 0..self.cfg.max_rounds {
            let mut envelopes = Vec::new();
            let mut chain_count = 0u64;
            for (st, out) in agents.iter().zip(outboxes.drain(..)) {
                for msg in out {
                    let is_chain = msg.is_chain();
                    for &to in s.neighbors(st.id) {
                        chain_count += u64::from(is_chain);
                        envelopes.push(Envelope {
                            from: st.id,
                            to,
                            payload: msg.clone(),
                        });
                    }
                }
            }
            let sent = envelopes.len() as u64;
            let mut inboxes = net.deliver_round(envelopes)?;
            for st in agents.iter_mut() {
                let inbox = std::mem::take(&mut inboxes[st.id.0]);
                outboxes.push(st.round(inbox, s, self.cfg));
            }

            stats.rounds_to_converge += 1;
            stats.total_messages += sent;
            stats.chain_messages += chain_count;
            for st in &agents {
                self.carried[st.id.0] = st.best_utility;
            }
            let max_utility = self
                .carried
                .iter()
                .copied()
                .fold(S::neg_infinity(), S::max);
            let mean_utility =
                self.carried.iter().copied().sum::<S>() / S::lit(self.carried.len().max(1) as f64);
            stats.utility_trace.push(RoundRecord {
                round: stats.rounds_to_converge,
                messages: sent,
                chain_messages: chain_count,
                max_utility,
                mean_utility,
                best_utilities: self.carried.clone(),
            });

            let pending = outboxes.iter().flatten().any(Message::is_chain)
                || agents.iter().any(|a| !a.buffer.is_empty())
                || net.in_flight_where(Message::is_chain) > 0;
            if !pending && check_terminated(&agents, self.cfg) {
                converged = true;
                break;
            }
        }

        stats.dropped_messages += net.stats().dropped;
        for st in &agents {
            stats.improvements_per_agent[st.id.0] += st.improvements;
            stats.evictions += st.evictions;
        }
        let best = agents
            .iter()
            .reduce(|a, b| {
                if outranks(b.best_utility, &b.best, a.best_utility, &a.best) {
                    b
                } else {
                    a
                }
            })
            .map(|a| (*a.best).clone())
            .unwrap_or_else(|| start.clone());
        let agreed = agents.iter().all(|a| *a.best == best);
        Ok(ComponentRun {
            best,
            converged,
            agreed,
        })
    }
}
