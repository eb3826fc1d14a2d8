use crate::coalition::{Assignment, CoalitionStructure, RobotId, Switch, TaskId};
use crate::Scalar;

/// A starting point for a run: chain budgets and initial assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub k_indices: Vec<usize>,
    pub assignment: Assignment,
    pub warnings: Vec<String>,
}

/// Source of `(K, ν_0)` for a run, e.g. a learned predictor.
pub trait WarmStart<S> {
    fn propose(&self, s: &CoalitionStructure<S>, previous: Option<&Assignment>) -> Proposal;
}

#[derive(Debug, Clone, PartialEq)]
pub enum KPolicy {
    /// Keep the structure's own `k_i`.
    FromStructure,
    Uniform(usize),
    PerRobot(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    Idle,
    /// The previous solution if one is given, else all-Idle.
    Previous,
    GreedyMarginal,
    Fixed(Assignment),
}

/// The built-in warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Heuristic {
    pub k: KPolicy,
    pub init: InitPolicy,
}

impl Default for Heuristic {
    fn default() -> Self {
        Self {
            k: KPolicy::FromStructure,
            init: InitPolicy::Idle,
        }
    }
}

impl Heuristic {
    pub fn uniform_k(c: usize) -> Self {
        Self {
            k: KPolicy::Uniform(c),
            ..Self::default()
        }
    }

    pub fn previous_solution() -> Self {
        Self {
            init: InitPolicy::Previous,
            ..Self::default()
        }
    }

    pub fn greedy_marginal() -> Self {
        Self {
            init: InitPolicy::GreedyMarginal,
            ..Self::default()
        }
    }

    pub fn fixed(a: Assignment) -> Self {
        Self {
            init: InitPolicy::Fixed(a),
            ..Self::default()
        }
    }

    pub fn with_k(mut self, k: KPolicy) -> Self {
        self.k = k;
        self
    }
}

impl<S: Scalar> WarmStart<S> for Heuristic {
    fn propose(&self, s: &CoalitionStructure<S>, previous: Option<&Assignment>) -> Proposal {
        let n = s.n_robots();
        let mut warnings = Vec::new();
        let k_indices = match &self.k {
            KPolicy::FromStructure => s.k_indices().to_vec(),
            KPolicy::Uniform(c) => vec![*c; n],
            KPolicy::PerRobot(k) => k.clone(),
        };
        let k_indices = if k_indices.len() == n && k_indices.iter().all(|&k| k >= 1) {
            k_indices
        } else {
            warnings.push(format!("proposed k {k_indices:?} rejected, keeping structure k"));
            s.k_indices().to_vec()
        };
        let assignment = match &self.init {
            InitPolicy::Idle => s.all_idle(),
            InitPolicy::Previous => previous.cloned().unwrap_or_else(|| s.all_idle()),
            InitPolicy::GreedyMarginal => greedy_marginal(s),
            InitPolicy::Fixed(a) => a.clone(),
        };
        let assignment = match s.validate_assignment(&assignment) {
            Ok(()) => assignment,
            Err(e) => {
                warnings.push(format!("proposed assignment rejected ({e}), starting all-idle"));
                s.all_idle()
            }
        };
        Proposal {
            k_indices,
            assignment,
            warnings,
        }
    }
}

/// Assigns robots in id order, each to the capable task with the largest
/// positive marginal gain given the robots placed before it. Ties go to
/// the lowest task id; no positive gain leaves the robot idle.
pub fn greedy_marginal<S: Scalar>(s: &CoalitionStructure<S>) -> Assignment {
    let idle = s.idle_task();
    let mut task_of: Vec<TaskId> = vec![idle; s.n_robots()];
    for i in 0..s.n_robots() {
        let robot = RobotId(i);
        let mut best: Option<(S, TaskId)> = None;
        for &task in s.capabilities(robot) {
            if task == idle {
                continue;
            }
            let gain = s.delta_unchecked(&task_of, Switch { robot, task });
            if gain > S::zero() && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, task));
            }
        }
        if let Some((_, task)) = best {
            task_of[i] = task;
        }
    }
    Assignment::from_tasks(task_of)
}
