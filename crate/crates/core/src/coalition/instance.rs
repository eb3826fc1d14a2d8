//! Canonical JSON form of structures and assignments.
//!
//! ```json
//! {
//!   "robots": 2,
//!   "tasks": [{"name": "a"}, {"name": "b"}, {"name": "idle", "kind": "idle"}],
//!   "capabilities": [[0, 1], [0, 1]],
//!   "k_indices": [1, 1],
//!   "edges": [[0, 1]],
//!   "utility": {"type": "table", "entries": [{"coalition": [0], "task": 0, "value": 2.0}]}
//! }
//! ```
//!
//! The idle task may be omitted on input; it is always written on output.
//! Ids are positions. `capabilities` may be omitted, meaning every robot can
//! do every task; `k_indices` defaults to all ones; `edges` defaults to a
//! complete graph.

use serde::{Deserialize, Serialize};

use super::{
    complete_edges, Assignment, CoalitionError, CoalitionStructure, RobotId, SaturatingUtility,
    TableUtility, TaskDescriptor, TaskId, TaskKind, UtilityModel,
};
use crate::Scalar;

/// Largest robot count for which a custom utility is exported by tabulating
/// every coalition.
pub const MAX_TABULATED_ROBOTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    #[serde(default = "generic_kind")]
    pub kind: TaskKind,
}

fn generic_kind() -> TaskKind {
    TaskKind::Generic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEntry<S> {
    pub coalition: Vec<usize>,
    pub task: usize,
    pub value: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum UtilityFile<S> {
    Table { entries: Vec<UtilityEntry<S>> },
    Saturating { value: Vec<S>, skill: Vec<Vec<S>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile<S> {
    pub robots: usize,
    pub tasks: Vec<TaskEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    pub utility: UtilityFile<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub task_of: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl<S: Scalar> CoalitionStructure<S> {
    pub fn from_instance(file: InstanceFile<S>) -> Result<Self, CoalitionError> {
        let tasks: Vec<TaskDescriptor> = file
            .tasks
            .into_iter()
            .enumerate()
            .map(|(i, t)| TaskDescriptor {
                id: TaskId(i),
                kind: t.kind,
                name: t.name,
            })
            .collect();
        let productive: Vec<TaskId> = tasks
            .iter()
            .filter(|t| t.kind != TaskKind::Idle)
            .map(|t| t.id)
            .collect();
        let capabilities = match file.capabilities {
            Some(caps) => {
                if caps.len() != file.robots {
                    return Err(CoalitionError::Format(format!(
                        "{} capability sets for {} robots",
                        caps.len(),
                        file.robots
                    )));
                }
                caps.into_iter()
                    .map(|c| c.into_iter().map(TaskId).collect())
                    .collect()
            }
            None => vec![productive; file.robots],
        };
        let k = file.k_indices.unwrap_or_else(|| vec![1; file.robots]);
        let edges: Vec<(RobotId, RobotId)> = match file.edges {
            Some(e) => e.into_iter().map(|(a, b)| (RobotId(a), RobotId(b))).collect(),
            None => complete_edges(file.robots),
        };
        let utility: UtilityModel<S> = match file.utility {
            UtilityFile::Table { entries } => {
                let mut table = TableUtility::new();
                for e in entries {
                    if e.coalition.iter().any(|&r| r >= file.robots) || e.task >= tasks.len() {
                        return Err(CoalitionError::Format(format!(
                            "utility entry {:?}/{} out of range",
                            e.coalition, e.task
                        )));
                    }
                    let ids: Vec<RobotId> = e.coalition.into_iter().map(RobotId).collect();
                    table.set(&ids, TaskId(e.task), e.value);
                }
                table.into()
            }
            UtilityFile::Saturating { value, skill } => {
                SaturatingUtility { value, skill }.into()
            }
        };
        Self::new(tasks, capabilities, utility, k, &edges)
    }

    /// Canonical file form. Custom utilities are tabulated over every
    /// non-empty coalition and fail beyond [`MAX_TABULATED_ROBOTS`].
    pub fn to_instance(&self) -> Result<InstanceFile<S>, CoalitionError> {
        let utility = match self.utility() {
            UtilityModel::Table(t) => UtilityFile::Table {
                entries: t
                    .entries()
                    .map(|(c, task, value)| UtilityEntry {
                        coalition: c.iter().map(|r| r.0).collect(),
                        task: task.0,
                        value,
                    })
                    .collect(),
            },
            UtilityModel::Saturating(s) => UtilityFile::Saturating {
                value: s.value.clone(),
                skill: s.skill.clone(),
            },
            UtilityModel::Custom(_) => UtilityFile::Table {
                entries: self.tabulate()?.entries().map(|(c, task, value)| UtilityEntry {
                    coalition: c.iter().map(|r| r.0).collect(),
                    task: task.0,
                    value,
                })
                .collect(),
            },
        };
        Ok(InstanceFile {
            robots: self.n_robots(),
            tasks: self
                .tasks()
                .iter()
                .map(|t| TaskEntry {
                    name: t.name.clone(),
                    kind: t.kind,
                })
                .collect(),
            capabilities: Some(
                self.robots()
                    .map(|r| self.capabilities(r).iter().map(|t| t.0).collect())
                    .collect(),
            ),
            k_indices: Some(self.k_indices().to_vec()),
            edges: Some(self.edges().into_iter().map(|(a, b)| (a.0, b.0)).collect()),
            utility,
        })
    }

    /// Table of `f` over every non-empty coalition whose members can all do
    /// the task, for every productive task. Zero entries are skipped.
    pub fn tabulate(&self) -> Result<TableUtility<S>, CoalitionError> {
        let n = self.n_robots();
        if n > MAX_TABULATED_ROBOTS {
            return Err(CoalitionError::Format(format!(
                "cannot tabulate {n} robots (limit {MAX_TABULATED_ROBOTS})"
            )));
        }
        let mut table = TableUtility::new();
        for task in self.tasks().iter().filter(|t| t.kind != TaskKind::Idle) {
            let able: Vec<RobotId> = self
                .robots()
                .filter(|&r| self.can_perform(r, task.id))
                .collect();
            for mask in 1u32..(1u32 << able.len()) {
                let members: Vec<RobotId> = able
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &r)| r)
                    .collect();
                let v = self.coalition_value(&members, task.id);
                if v != S::zero() {
                    table.set(&members, task.id, v);
                }
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String, CoalitionError> {
        serde_json::to_string_pretty(&self.to_instance()?)
            .map_err(|e| CoalitionError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CoalitionError> {
        let file: InstanceFile<S> =
            serde_json::from_str(text).map_err(|e| CoalitionError::Format(e.to_string()))?;
        Self::from_instance(file)
    }

    pub fn assignment_file(&self, a: &Assignment) -> AssignmentFile {
        AssignmentFile {
            task_of: a.tasks().iter().map(|t| t.0).collect(),
            names: a
                .tasks()
                .iter()
                .map(|t| self.tasks().get(t.0).map(|d| d.name.clone()).unwrap_or_default())
                .collect(),
        }
    }

    pub fn assignment_from_file(&self, file: &AssignmentFile) -> Result<Assignment, CoalitionError> {
        let a = Assignment::from_indices(&file.task_of);
        self.validate_assignment(&a)?;
        Ok(a)
    }
}
