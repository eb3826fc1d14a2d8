//! Small hand-checkable instances shared by tests, docs and the CLI.
//!
//! Robots are numbered from zero; tasks `a = 0`, `b = 1`, idle `= 2`.

use crate::coalition::{complete_edges, generic_tasks, CoalitionStructure, TableUtility, TaskId};
use crate::Scalar;

pub const A: TaskId = TaskId(0);
pub const B: TaskId = TaskId(1);

fn two_robot_two_task<S: Scalar>(table: [f64; 6], k: usize) -> CoalitionStructure<S> {
    let [a1, a2, a12, b1, b2, b12] = table.map(S::lit);
    let utility = TableUtility::new()
        .with(&[0], 0, a1)
        .with(&[1], 0, a2)
        .with(&[0, 1], 0, a12)
        .with(&[0], 1, b1)
        .with(&[1], 1, b2)
        .with(&[0, 1], 1, b12);
    CoalitionStructure::new(
        generic_tasks(&["a", "b"]),
        vec![vec![A, B], vec![A, B]],
        utility,
        vec![k, k],
        &complete_edges(2),
    )
    .expect("fixture is well formed")
}

/// Instance I0: mean utilities `aa 2.5, ab 2.0, ba 2.0, bb 1.0`.
pub fn i0<S: Scalar>(k: usize) -> CoalitionStructure<S> {
    two_robot_two_task([2.0, 3.0, 5.0, 1.0, 2.0, 2.0], k)
}

/// Instance I1: mean utilities `aa 1.1, ab 1.05, ba 1.05, bb 2.0`. `aa` is
/// Nash stable but not 2-serial stable; `bb` is optimal.
pub fn i1<S: Scalar>(k: usize) -> CoalitionStructure<S> {
    two_robot_two_task([2.0, 2.0, 2.2, 0.1, 0.1, 4.0], k)
}
