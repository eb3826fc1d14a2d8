use std::collections::HashSet;
use std::sync::Arc;

use super::message::{outranks, Advert, ChainMessage, Message};
use super::EngineConfig;
use crate::coalition::{Assignment, ChainTransformation, CoalitionError, CoalitionStructure, RobotId, Switch};
use crate::Scalar;

/// One robot's view: its message buffer `Π_i` and best-known assignment
/// `ν*_i`.
#[derive(Debug, Clone)]
pub struct AgentState<S> {
    pub id: RobotId,
    /// Chains waiting for local optimization in the next round.
    pub buffer: Vec<Arc<ChainMessage<S>>>,
    pub best: Arc<Assignment>,
    pub best_utility: S,
    pub quiet_rounds: usize,
    /// Best changes that gained more than `ε`.
    pub improvements: usize,
    pub evictions: usize,
    buffer_cap: usize,
    seen: HashSet<u64>,
}

/// Creates robot `id` holding `warm` and emits its rooted initial chains:
/// one single-switch chain per capable task other than its current one.
pub fn init_agent<S: Scalar>(
    s: &CoalitionStructure<S>,
    id: RobotId,
    warm: &Assignment,
    buffer_cap: usize,
) -> Result<(AgentState<S>, Vec<Message<S>>), CoalitionError> {
    if id.0 >= s.n_robots() {
        return Err(CoalitionError::UnknownRobot(id));
    }
    let best_utility = s.mean_utility(warm)?;
    let mut st = AgentState {
        id,
        buffer: Vec::new(),
        best: Arc::new(warm.clone()),
        best_utility,
        quiet_rounds: 0,
        improvements: 0,
        evictions: 0,
        buffer_cap: buffer_cap.max(1),
        seen: HashSet::new(),
    };
    let mut out = Vec::new();
    st.emit_roots(s, &mut out);
    Ok((st, out))
}

impl<S: Scalar> AgentState<S> {
    pub fn seen_messages(&self) -> usize {
        self.seen.len()
    }

    /// One round: receive, consensus, local optimization, send.
    ///
    /// Returns the messages to broadcast to every neighbor. The last one is
    /// always this robot's advert.
    pub fn round(
        &mut self,
        inbox: Vec<Message<S>>,
        s: &CoalitionStructure<S>,
        cfg: &EngineConfig<S>,
    ) -> Vec<Message<S>> {
        let eps = cfg.epsilon;
        let mut changed = false;

        // Receive.
        let mut top_advert: Option<Arc<Advert<S>>> = None;
        for msg in inbox {
            match msg {
                Message::Chain(c) => {
                    if self.seen.insert(c.digest()) {
                        self.buffer.push(c);
                    }
                }
                Message::Advert(a) => {
                    let better = top_advert
                        .as_ref()
                        .is_none_or(|t| outranks(a.utility, &a.best, t.utility, &t.best));
                    if better {
                        top_advert = Some(a);
                    }
                }
            }
        }
        self.enforce_cap();

        // Consensus.
        if let Some(a) = top_advert {
            if outranks(a.utility, &a.best, self.best_utility, &self.best) {
                if a.utility - self.best_utility > eps {
                    self.improvements += 1;
                }
                self.best = a.best.clone();
                self.best_utility = a.utility;
                changed = true;
                self.rebase(s);
            }
        }

        // Local optimization.
        let mut out = Vec::new();
        for msg in std::mem::take(&mut self.buffer) {
            if msg.utility > self.best_utility + eps {
                changed |= self.accept(msg.proposed(), s, eps);
            }
            let extendable = msg.chain.len() < msg.budget
                && !msg.chain.contains_robot(self.id)
                && msg
                    .chain
                    .last_robot()
                    .is_some_and(|last| s.are_neighbors(last, self.id));
            if !extendable {
                continue;
            }
            let current = msg.proposed();
            let own = current.task_of(self.id);
            for &task in s.capabilities(self.id) {
                if task == own {
                    continue;
                }
                let sw = Switch {
                    robot: self.id,
                    task,
                };
                let utility = msg.utility + s.delta_unchecked(current.tasks(), sw);
                if utility > self.best_utility + eps {
                    changed |= self.accept(current.with_switch(sw), s, eps);
                }
                let ext = ChainMessage {
                    base: msg.base.clone(),
                    base_utility: msg.base_utility,
                    chain: msg.chain.extended(sw),
                    budget: msg.budget,
                    root: msg.root,
                    utility,
                };
                if ext.chain.len() < ext.budget && self.seen.insert(ext.digest()) {
                    out.push(Message::Chain(Arc::new(ext)));
                }
            }
        }

        if changed {
            self.emit_roots(s, &mut out);
            self.quiet_rounds = 0;
        } else {
            self.quiet_rounds += 1;
        }

        out.push(Message::Advert(Arc::new(Advert {
            from: self.id,
            best: self.best.clone(),
            utility: self.best_utility,
        })));
        out
    }

    /// Replaces the best with `cand` if its canonically recomputed utility
    /// outranks the current one.
    fn accept(&mut self, cand: Assignment, s: &CoalitionStructure<S>, eps: S) -> bool {
        let u = s.mean_utility_unchecked(&cand);
        if !outranks(u, &cand, self.best_utility, &self.best) {
            return false;
        }
        if u - self.best_utility > eps {
            self.improvements += 1;
        }
        self.best = Arc::new(cand);
        self.best_utility = u;
        true
    }

    /// Chains rooted here on the current best. Each is queued for
    /// self-evaluation next round and broadcast if it can still grow.
    fn emit_roots(&mut self, s: &CoalitionStructure<S>, out: &mut Vec<Message<S>>) {
        let budget = s.k_of(self.id);
        let own = self.best.task_of(self.id);
        for &task in s.capabilities(self.id) {
            if task == own {
                continue;
            }
            let sw = Switch {
                robot: self.id,
                task,
            };
            let msg = Arc::new(ChainMessage {
                base: self.best.clone(),
                base_utility: self.best_utility,
                chain: ChainTransformation::from_switches([sw]),
                budget,
                root: self.id,
                utility: self.best_utility + s.delta_unchecked(self.best.tasks(), sw),
            });
            if !self.seen.insert(msg.digest()) {
                continue;
            }
            self.buffer.push(msg.clone());
            if budget > 1 {
                out.push(Message::Chain(msg));
            }
        }
        self.enforce_cap();
    }

    /// Moves every buffered chain onto the new best. Chains with a link
    /// that became a no-op are dropped; the rest are re-evaluated. Chains
    /// through this robot are dropped too, since it cannot extend them and
    /// its own roots are regenerated and broadcast afresh.
    fn rebase(&mut self, s: &CoalitionStructure<S>) {
        let buffered = std::mem::take(&mut self.buffer);
        for msg in buffered {
            if *msg.base == *self.best {
                self.buffer.push(msg);
                continue;
            }
            if msg.chain.contains_robot(self.id) || !s.is_effective_on(&self.best, &msg.chain) {
                continue;
            }
            let mut cur = (*self.best).clone();
            let mut utility = self.best_utility;
            for sw in &msg.chain.switches {
                utility = utility + s.delta_unchecked(cur.tasks(), *sw);
                cur = cur.with_switch(*sw);
            }
            let moved = ChainMessage {
                base: self.best.clone(),
                base_utility: self.best_utility,
                chain: msg.chain.clone(),
                budget: msg.budget,
                root: msg.root,
                utility,
            };
            if self.seen.insert(moved.digest()) {
                self.buffer.push(Arc::new(moved));
            }
        }
    }

    /// Drops lowest-utility chains, oldest first, beyond the buffer cap.
    fn enforce_cap(&mut self) {
        let excess = self.buffer.len().saturating_sub(self.buffer_cap);
        if excess == 0 {
            return;
        }
        let mut order: Vec<usize> = (0..self.buffer.len()).collect();
        order.sort_by(|&a, &b| {
            self.buffer[a]
                .utility
                .partial_cmp(&self.buffer[b].utility)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut drop = vec![false; self.buffer.len()];
        for &i in &order[..excess] {
            drop[i] = true;
        }
        let mut idx = 0;
        self.buffer.retain(|_| {
            let keep = !drop[idx];
            idx += 1;
            keep
        });
        self.evictions += excess;
    }
}
