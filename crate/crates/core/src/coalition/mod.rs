//! Coalition structures, assignments, switches and chain transformations.
//!
//! Everything here is a plain value: structures are immutable once built and
//! every operation returns a new [`Assignment`] instead of mutating one.

mod instance;
mod utility;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use instance::{AssignmentFile, InstanceFile, TaskEntry, UtilityEntry, UtilityFile};
pub use utility::{SaturatingUtility, TableUtility, UtilityFunction, UtilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Exploration,
    Capture,
    Defense,
    /// Zero-utility task held by robots that are not doing anything.
    Idle,
    /// Abstract task of a hand-written or generated instance.
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDescriptor {
    pub id: TaskId,
    pub kind: TaskKind,
    pub name: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoalitionError {
    #[error("assignment has {got} entries, structure has {expected} robots")]
    WrongLength { expected: usize, got: usize },
    #[error("robot {robot} cannot perform task {task}")]
    InvalidAssignment { robot: RobotId, task: TaskId },
    #[error("invalid switch: robot {robot} -> task {task}")]
    InvalidSwitch { robot: RobotId, task: TaskId },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("robot {0} does not exist")]
    UnknownRobot(RobotId),
    #[error("robot {robot} is not a member of the coalition")]
    NotInCoalition { robot: RobotId },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("instance format: {0}")]
    Format(String),
}

/// Reassign one robot to one task (`ξ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Switch {
    pub robot: RobotId,
    pub task: TaskId,
}

impl Switch {
    pub fn new(robot: usize, task: usize) -> Self {
        Self {
            robot: RobotId(robot),
            task: TaskId(task),
        }
    }
}

/// Ordered chain of switches where consecutive robots are communication
/// neighbors. The empty chain is the null transformation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChainTransformation {
    pub switches: Vec<Switch>,
}

impl ChainTransformation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_switches(switches: impl IntoIterator<Item = Switch>) -> Self {
        Self {
            switches: switches.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.switches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switches.is_empty()
    }

    pub fn root(&self) -> Option<RobotId> {
        self.switches.first().map(|s| s.robot)
    }

    pub fn last_robot(&self) -> Option<RobotId> {
        self.switches.last().map(|s| s.robot)
    }

    pub fn contains_robot(&self, robot: RobotId) -> bool {
        self.switches.iter().any(|s| s.robot == robot)
    }

    /// Returns this chain with `sw` appended.
    pub fn extended(&self, sw: Switch) -> Self {
        let mut switches = Vec::with_capacity(self.switches.len() + 1);
        switches.extend_from_slice(&self.switches);
        switches.push(sw);
        Self { switches }
    }
}

/// Total map robot → task. Coalitions are the fibres of this map, so they are
/// disjoint and cover every robot by construction.
///
/// Equality, ordering and hashing look at the task map only; `version` is a
/// generation counter bumped by every switch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assignment {
    task_of: Vec<TaskId>,
    #[serde(default)]
    version: u64,
}

impl Assignment {
    pub fn from_tasks(task_of: Vec<TaskId>) -> Self {
        Self {
            task_of,
            version: 0,
        }
    }

    pub fn from_indices(tasks: &[usize]) -> Self {
        Self::from_tasks(tasks.iter().copied().map(TaskId).collect())
    }

    pub fn task_of(&self, robot: RobotId) -> TaskId {
        self.task_of[robot.0]
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.task_of
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.task_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.task_of.is_empty()
    }

    /// Members of `task`'s coalition, sorted by id.
    pub fn coalition(&self, task: TaskId) -> Vec<RobotId> {
        self.task_of
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == task)
            .map(|(i, _)| RobotId(i))
            .collect()
    }

    /// All coalitions, indexed by task id.
    pub fn coalitions(&self, n_tasks: usize) -> Vec<Vec<RobotId>> {
        let mut out = vec![Vec::new(); n_tasks];
        for (i, t) in self.task_of.iter().enumerate() {
            out[t.0].push(RobotId(i));
        }
        out
    }

    pub(crate) fn with_switch(&self, sw: Switch) -> Self {
        let mut task_of = self.task_of.clone();
        task_of[sw.robot.0] = sw.task;
        Self {
            task_of,
            version: self.version + 1,
        }
    }

    pub(crate) fn with_chain(&self, chain: &ChainTransformation) -> Self {
        if chain.is_empty() {
            return self.clone();
        }
        let mut task_of = self.task_of.clone();
        for sw in &chain.switches {
            task_of[sw.robot.0] = sw.task;
        }
        Self {
            task_of,
            version: self.version + chain.len() as u64,
        }
    }
}

impl PartialEq for Assignment {
    fn eq(&self, other: &Self) -> bool {
        self.task_of == other.task_of
    }
}

impl Eq for Assignment {}

impl Hash for Assignment {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.task_of.hash(state);
    }
}

impl PartialOrd for Assignment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Assignment {
    /// Lexicographic on the task map, lowest robot id first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.task_of.cmp(&other.task_of)
    }
}

/// `(R, Ω, f, K)` plus capability sets and the communication graph.
///
/// Exactly one task is the idle task; it is in every capability set and is
/// worth zero. `M` in the mean utility counts the other tasks only.
#[derive(Debug, Clone)]
pub struct CoalitionStructure<S> {
    tasks: Vec<TaskDescriptor>,
    capabilities: Vec<Vec<TaskId>>,
    utility: UtilityModel<S>,
    k_indices: Vec<usize>,
    neighbors: Vec<Vec<RobotId>>,
    idle: TaskId,
}

impl<S: Scalar> CoalitionStructure<S> {
    /// Builds and validates a structure.
    ///
    /// `tasks` may omit the idle task, in which case one is appended. Task
    /// ids must equal their position. The idle task is added to every
    /// capability set; capability lists are sorted and deduplicated.
    pub fn new(
        mut tasks: Vec<TaskDescriptor>,
        capabilities: Vec<Vec<TaskId>>,
        utility: impl Into<UtilityModel<S>>,
        k_indices: Vec<usize>,
        edges: &[(RobotId, RobotId)],
    ) -> Result<Self, CoalitionError> {
        let n = capabilities.len();
        for (pos, t) in tasks.iter().enumerate() {
            if t.id.0 != pos {
                return Err(CoalitionError::InvalidStructure(format!(
                    "task at position {pos} has id {}",
                    t.id
                )));
            }
        }
        let idle_count = tasks.iter().filter(|t| t.kind == TaskKind::Idle).count();
        let idle = match idle_count {
            0 => {
                let id = TaskId(tasks.len());
                tasks.push(TaskDescriptor {
                    id,
                    kind: TaskKind::Idle,
                    name: "idle".into(),
                });
                id
            }
            1 => tasks.iter().find(|t| t.kind == TaskKind::Idle).unwrap().id,
            c => {
                return Err(CoalitionError::InvalidStructure(format!(
                    "{c} idle tasks; exactly one allowed"
                )))
            }
        };
        if k_indices.len() != n {
            return Err(CoalitionError::InvalidStructure(format!(
                "{} k indices for {n} robots",
                k_indices.len()
            )));
        }
        if let Some(pos) = k_indices.iter().position(|&k| k == 0) {
            return Err(CoalitionError::InvalidStructure(format!(
                "k index of robot {pos} must be at least 1"
            )));
        }
        let mut caps = Vec::with_capacity(n);
        for (i, mut set) in capabilities.into_iter().enumerate() {
            if let Some(bad) = set.iter().find(|t| t.0 >= tasks.len()) {
                return Err(CoalitionError::InvalidStructure(format!(
                    "robot {i} lists unknown task {bad}"
                )));
            }
            set.push(idle);
            set.sort_unstable();
            set.dedup();
            caps.push(set);
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a.0 >= n || b.0 >= n {
                return Err(CoalitionError::InvalidStructure(format!(
                    "edge ({a}, {b}) references a missing robot"
                )));
            }
            if a == b {
                return Err(CoalitionError::InvalidStructure(format!("self-loop at {a}")));
            }
            neighbors[a.0].push(b);
            neighbors[b.0].push(a);
        }
        for adj in &mut neighbors {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self {
            tasks,
            capabilities: caps,
            utility: utility.into(),
            k_indices,
            neighbors,
            idle,
        })
    }

    pub fn n_robots(&self) -> usize {
        self.capabilities.len()
    }

    /// All tasks including the idle task.
    pub fn tasks(&self) -> &[TaskDescriptor] {
        &self.tasks
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// `M`: number of non-idle tasks.
    pub fn n_productive_tasks(&self) -> usize {
        self.tasks.len() - 1
    }

    pub fn idle_task(&self) -> TaskId {
        self.idle
    }

    pub fn robots(&self) -> impl Iterator<Item = RobotId> {
        (0..self.n_robots()).map(RobotId)
    }

    pub fn capabilities(&self, robot: RobotId) -> &[TaskId] {
        &self.capabilities[robot.0]
    }

    pub fn can_perform(&self, robot: RobotId, task: TaskId) -> bool {
        self.capabilities
            .get(robot.0)
            .is_some_and(|c| c.binary_search(&task).is_ok())
    }

    pub fn k_indices(&self) -> &[usize] {
        &self.k_indices
    }

    pub fn k_of(&self, robot: RobotId) -> usize {
        self.k_indices[robot.0]
    }

    pub fn neighbors(&self, robot: RobotId) -> &[RobotId] {
        &self.neighbors[robot.0]
    }

    pub fn are_neighbors(&self, a: RobotId, b: RobotId) -> bool {
        self.neighbors
            .get(a.0)
            .is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    pub fn edges(&self) -> Vec<(RobotId, RobotId)> {
        let mut out = Vec::new();
        for (i, adj) in self.neighbors.iter().enumerate() {
            out.extend(adj.iter().filter(|j| j.0 > i).map(|&j| (RobotId(i), j)));
        }
        out
    }

    pub fn utility(&self) -> &UtilityModel<S> {
        &self.utility
    }

    /// Same structure with a different optimality index vector.
    pub fn with_k(&self, k_indices: Vec<usize>) -> Result<Self, CoalitionError> {
        if k_indices.len() != self.n_robots() || k_indices.contains(&0) {
            return Err(CoalitionError::InvalidStructure(
                "k vector must have one positive entry per robot".into(),
            ));
        }
        Ok(Self {
            k_indices,
            ..self.clone()
        })
    }

    /// Same structure with a different communication graph.
    pub fn with_edges(&self, edges: &[(RobotId, RobotId)]) -> Result<Self, CoalitionError> {
        Self::new(
            self.tasks.clone(),
            self.capabilities.clone(),
            self.utility.clone(),
            self.k_indices.clone(),
            edges,
        )
    }

    /// Connected components of the communication graph, each sorted, in
    /// order of their smallest member.
    pub fn components(&self) -> Vec<Vec<RobotId>> {
        let n = self.n_robots();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![RobotId(start)];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in &self.neighbors[u] {
                    if !seen[v.0] {
                        seen[v.0] = true;
                        comp.push(*v);
                        stack.push(v.0);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// `f(coalition, task)` with `f(∅, ·) = 0` and `f(·, idle) = 0`.
    pub fn coalition_value(&self, coalition: &[RobotId], task: TaskId) -> S {
        if coalition.is_empty() || task == self.idle {
            S::zero()
        } else {
            self.utility.evaluate(coalition, task)
        }
    }

    pub fn all_idle(&self) -> Assignment {
        Assignment::from_tasks(vec![self.idle; self.n_robots()])
    }

    pub fn validate_assignment(&self, a: &Assignment) -> Result<(), CoalitionError> {
        if a.len() != self.n_robots() {
            return Err(CoalitionError::WrongLength {
                expected: self.n_robots(),
                got: a.len(),
            });
        }
        for (i, &t) in a.tasks().iter().enumerate() {
            if !self.can_perform(RobotId(i), t) {
                return Err(CoalitionError::InvalidAssignment {
                    robot: RobotId(i),
                    task: t,
                });
            }
        }
        Ok(())
    }

    fn check_switch(&self, sw: Switch) -> Result<(), CoalitionError> {
        if sw.robot.0 >= self.n_robots() {
            return Err(CoalitionError::UnknownRobot(sw.robot));
        }
        if !self.can_perform(sw.robot, sw.task) {
            return Err(CoalitionError::InvalidSwitch {
                robot: sw.robot,
                task: sw.task,
            });
        }
        Ok(())
    }

    /// Mean utility `ρ(ν) = Σ_m f(R_m, ω_m) / M`.
    pub fn mean_utility(&self, a: &Assignment) -> Result<S, CoalitionError> {
        self.validate_assignment(a)?;
        Ok(self.mean_utility_unchecked(a))
    }

    pub(crate) fn mean_utility_unchecked(&self, a: &Assignment) -> S {
        let m = self.n_productive_tasks();
        if m == 0 {
            return S::zero();
        }
        let total: S = a
            .coalitions(self.n_tasks())
            .iter()
            .enumerate()
            .map(|(t, members)| self.coalition_value(members, TaskId(t)))
            .sum();
        total / S::lit(m as f64)
    }

    pub fn apply_switch(&self, a: &Assignment, sw: Switch) -> Result<Assignment, CoalitionError> {
        self.check_switch(sw)?;
        if a.len() != self.n_robots() {
            return Err(CoalitionError::WrongLength {
                expected: self.n_robots(),
                got: a.len(),
            });
        }
        Ok(a.with_switch(sw))
    }

    /// Left-to-right fold of [`apply_switch`](Self::apply_switch). The chain
    /// must satisfy the neighbor and capability constraints.
    pub fn apply_chain(
        &self,
        a: &Assignment,
        chain: &ChainTransformation,
    ) -> Result<Assignment, CoalitionError> {
        for sw in &chain.switches {
            self.check_switch(*sw)
                .map_err(|e| CoalitionError::InvalidChain(e.to_string()))?;
        }
        for pair in chain.switches.windows(2) {
            if !self.are_neighbors(pair[0].robot, pair[1].robot) {
                return Err(CoalitionError::InvalidChain(format!(
                    "{} and {} are not neighbors",
                    pair[0].robot, pair[1].robot
                )));
            }
        }
        if a.len() != self.n_robots() {
            return Err(CoalitionError::WrongLength {
                expected: self.n_robots(),
                got: a.len(),
            });
        }
        Ok(a.with_chain(chain))
    }

    /// True iff `chain` starts at `root`, has at most `budget` switches,
    /// every switch is valid, consecutive robots are neighbors and no robot
    /// appears twice.
    pub fn validate_chain(&self, chain: &ChainTransformation, root: RobotId, budget: usize) -> bool {
        if chain.root() != Some(root) || chain.len() > budget {
            return false;
        }
        if chain.switches.iter().any(|sw| self.check_switch(*sw).is_err()) {
            return false;
        }
        if chain
            .switches
            .windows(2)
            .any(|p| !self.are_neighbors(p[0].robot, p[1].robot))
        {
            return false;
        }
        let mut robots: Vec<RobotId> = chain.switches.iter().map(|s| s.robot).collect();
        robots.sort_unstable();
        robots.windows(2).all(|w| w[0] != w[1])
    }

    /// True iff every switch of `chain` changes its robot's task relative to
    /// `base`. Chains with a no-op link are not explored by the engine or the
    /// oracle.
    pub fn is_effective_on(&self, base: &Assignment, chain: &ChainTransformation) -> bool {
        chain
            .switches
            .iter()
            .all(|sw| base.task_of(sw.robot) != sw.task)
    }

    /// Change in mean utility caused by `sw`, computed from the two
    /// coalitions it touches. `mean_utility(apply_switch(a, sw)) ==
    /// mean_utility(a) + delta_utility(a, sw)` up to rounding.
    pub fn delta_utility(&self, a: &Assignment, sw: Switch) -> Result<S, CoalitionError> {
        self.check_switch(sw)?;
        self.validate_assignment(a)?;
        Ok(self.delta_unchecked(a.tasks(), sw))
    }

    pub(crate) fn delta_unchecked(&self, task_of: &[TaskId], sw: Switch) -> S {
        let old = task_of[sw.robot.0];
        let m = self.n_productive_tasks();
        if old == sw.task || m == 0 {
            return S::zero();
        }
        let mut old_members = Vec::new();
        let mut new_members = Vec::new();
        for (i, &t) in task_of.iter().enumerate() {
            if t == old {
                old_members.push(RobotId(i));
            } else if t == sw.task {
                new_members.push(RobotId(i));
            }
        }
        let old_before = self.coalition_value(&old_members, old);
        old_members.retain(|&r| r != sw.robot);
        let old_after = self.coalition_value(&old_members, old);
        let new_before = self.coalition_value(&new_members, sw.task);
        let pos = new_members.partition_point(|&r| r < sw.robot);
        new_members.insert(pos, sw.robot);
        let new_after = self.coalition_value(&new_members, sw.task);
        (new_after - new_before + old_after - old_before) / S::lit(m as f64)
    }

    /// `f(C, ω) − f(C ∖ {i}, ω)` for `i ∈ C`.
    pub fn marginal_utility(
        &self,
        coalition: &[RobotId],
        robot: RobotId,
        task: TaskId,
    ) -> Result<S, CoalitionError> {
        let mut members = coalition.to_vec();
        members.sort_unstable();
        members.dedup();
        let Some(pos) = members.iter().position(|&r| r == robot) else {
            return Err(CoalitionError::NotInCoalition { robot });
        };
        let with = self.coalition_value(&members, task);
        members.remove(pos);
        let without = self.coalition_value(&members, task);
        Ok(with - without)
    }

    /// Looks up a task by name.
    pub fn task_by_name(&self, name: &str) -> Option<TaskId> {
        self.tasks.iter().find(|t| t.name == name).map(|t| t.id)
    }
}

/// Generic task descriptors named `names[i]` with ids `0..names.len()`.
pub fn generic_tasks<T: AsRef<str>>(names: &[T]) -> Vec<TaskDescriptor> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| TaskDescriptor {
            id: TaskId(i),
            kind: TaskKind::Generic,
            name: n.as_ref().to_string(),
        })
        .collect()
}

/// Every pair of distinct robots.
pub fn complete_edges(n: usize) -> Vec<(RobotId, RobotId)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((RobotId(i), RobotId(j)));
        }
    }
    out
}

#[cfg(test)]
mod tests;
