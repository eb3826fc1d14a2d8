use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::coalition::{Assignment, ChainTransformation, RobotId};
use crate::Scalar;

/// A rooted chain travelling through the team: `(ν, Ξ, k)` plus the root and
/// the utility bookkeeping needed to evaluate extensions locally.
///
/// The root's own switch is the first link of `chain`, so `chain.len()`
/// is the full transformation length bounded by `budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMessage<S> {
    pub base: Arc<Assignment>,
    /// `ρ(base)`.
    pub base_utility: S,
    pub chain: ChainTransformation,
    /// `k` of the root robot.
    pub budget: usize,
    pub root: RobotId,
    /// `ρ(chain(base))`, accumulated from per-switch deltas.
    pub utility: S,
}

impl<S: Scalar> ChainMessage<S> {
    /// Content digest over `(base task map, chain, root)`.
    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.base.tasks().hash(&mut h);
        self.chain.hash(&mut h);
        self.root.hash(&mut h);
        h.finish()
    }

    /// The assignment this message proposes.
    pub fn proposed(&self) -> Assignment {
        self.base.with_chain(&self.chain)
    }
}

/// A robot's current best assignment, shared with its neighbors every round.
#[derive(Debug, Clone, PartialEq)]
pub struct Advert<S> {
    pub from: RobotId,
    pub best: Arc<Assignment>,
    pub utility: S,
}

#[derive(Debug, Clone)]
pub enum Message<S> {
    Chain(Arc<ChainMessage<S>>),
    Advert(Arc<Advert<S>>),
}

impl<S> Message<S> {
    pub fn is_chain(&self) -> bool {
        matches!(self, Self::Chain(_))
    }
}

/// Strict total order used for consensus: higher utility wins, equal
/// utility goes to the lexicographically smaller task map.
pub fn outranks<S: Scalar>(cand_u: S, cand: &Assignment, cur_u: S, cur: &Assignment) -> bool {
    cand_u > cur_u || (cand_u == cur_u && cand < cur)
}
