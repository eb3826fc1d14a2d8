use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{RobotId, TaskId};
use crate::Scalar;

/// Coalition-level utility `f(coalition, task)`.
///
/// `coalition` is always passed sorted by robot id and without duplicates.
/// Implementations only see non-empty coalitions and non-idle tasks; the
/// structure short-circuits both cases to zero.
pub trait UtilityFunction<S>: Send + Sync {
    fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> S;
}

impl<S, F> UtilityFunction<S> for F
where
    F: Fn(&[RobotId], TaskId) -> S + Send + Sync,
{
    fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> S {
        self(coalition, task)
    }
}

/// Explicit table of coalition values; coalitions not listed are worth zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableUtility<S> {
    entries: BTreeMap<(TaskId, Vec<RobotId>), S>,
}

impl<S: Scalar> TableUtility<S> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Sets `f(coalition, task) = value`. The coalition is normalized
    /// (sorted, deduplicated) before insertion.
    pub fn set(&mut self, coalition: &[RobotId], task: TaskId, value: S) -> &mut Self {
        let mut key = coalition.to_vec();
        key.sort_unstable();
        key.dedup();
        self.entries.insert((task, key), value);
        self
    }

    pub fn with(mut self, coalition: &[usize], task: usize, value: S) -> Self {
        let ids: Vec<RobotId> = coalition.iter().copied().map(RobotId).collect();
        self.set(&ids, TaskId(task), value);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[RobotId], TaskId, S)> + '_ {
        self.entries
            .iter()
            .map(|((task, coalition), value)| (coalition.as_slice(), *task, *value))
    }
}

impl<S: Scalar> UtilityFunction<S> for TableUtility<S> {
    fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> S {
        // Lookup needs an owned key; coalitions are tiny.
        self.entries
            .get(&(task, coalition.to_vec()))
            .copied()
            .unwrap_or_else(S::zero)
    }
}

/// Saturating "probability of success" utility:
/// `f(C, m) = value[m] * (1 - Π_{i ∈ C} (1 - skill[i][m]))`.
///
/// Monotone and submodular in the coalition, so marginal gains shrink as
/// robots join. Skills are clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturatingUtility<S> {
    /// Per-task value, indexed by task id.
    pub value: Vec<S>,
    /// `skill[robot][task]`.
    pub skill: Vec<Vec<S>>,
}

impl<S: Scalar> UtilityFunction<S> for SaturatingUtility<S> {
    fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> S {
        let Some(&value) = self.value.get(task.0) else {
            return S::zero();
        };
        let miss = coalition.iter().fold(S::one(), |acc, r| {
            let p = self
                .skill
                .get(r.0)
                .and_then(|row| row.get(task.0))
                .copied()
                .unwrap_or_else(S::zero)
                .max(S::zero())
                .min(S::one());
            acc * (S::one() - p)
        });
        value * (S::one() - miss)
    }
}

/// The utility attached to a structure. Table and saturating models are
/// serializable as-is; custom evaluators are exported by tabulation.
#[derive(Clone)]
pub enum UtilityModel<S> {
    Table(TableUtility<S>),
    Saturating(SaturatingUtility<S>),
    Custom(Arc<dyn UtilityFunction<S>>),
}

impl<S: Scalar> UtilityModel<S> {
    pub fn custom(f: impl UtilityFunction<S> + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub(crate) fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> S {
        match self {
            Self::Table(t) => t.evaluate(coalition, task),
            Self::Saturating(s) => s.evaluate(coalition, task),
            Self::Custom(f) => f.evaluate(coalition, task),
        }
    }
}

impl<S> fmt::Debug for UtilityModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Table(t) => write!(f, "Table({} entries)", t.entries.len()),
            Self::Saturating(s) => write!(f, "Saturating({} tasks)", s.value.len()),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl<S: Scalar> From<TableUtility<S>> for UtilityModel<S> {
    fn from(t: TableUtility<S>) -> Self {
        Self::Table(t)
    }
}

impl<S: Scalar> From<SaturatingUtility<S>> for UtilityModel<S> {
    fn from(s: SaturatingUtility<S>) -> Self {
        Self::Saturating(s)
    }
}
