use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{i0, i1, A, B};

/// Direct evaluation of Eq-style mean utility from a raw table, bypassing
/// `CoalitionStructure` entirely.
fn mean_from_raw(raw: &HashMap<(Vec<usize>, usize), f64>, task_of: &[usize], m: usize) -> f64 {
    let mut total = 0.0;
    for task in 0..m {
        let members: Vec<usize> = (0..task_of.len()).filter(|&i| task_of[i] == task).collect();
        total += raw.get(&(members, task)).copied().unwrap_or(0.0);
    }
    total / m as f64
}

fn raw_i0() -> HashMap<(Vec<usize>, usize), f64> {
    HashMap::from([
        ((vec![0], 0), 2.0),
        ((vec![1], 0), 3.0),
        ((vec![0, 1], 0), 5.0),
        ((vec![0], 1), 1.0),
        ((vec![1], 1), 2.0),
        ((vec![0, 1], 1), 2.0),
    ])
}

fn raw_i1() -> HashMap<(Vec<usize>, usize), f64> {
    HashMap::from([
        ((vec![0], 0), 2.0),
        ((vec![1], 0), 2.0),
        ((vec![0, 1], 0), 2.2),
        ((vec![0], 1), 0.1),
        ((vec![1], 1), 0.1),
        ((vec![0, 1], 1), 4.0),
    ])
}

#[test]
fn fixture_tables_match_raw_enumeration() {
    let expected_i0 = [("aa", 2.5), ("ab", 2.0), ("ba", 2.0), ("bb", 1.0)];
    let expected_i1 = [("aa", 1.1), ("ab", 1.05), ("ba", 1.05), ("bb", 2.0)];
    let code = |name: &str| -> Vec<usize> { name.bytes().map(|b| (b - b'a') as usize).collect() };
    let s0 = i0::<f64>(1);
    let s1 = i1::<f64>(1);
    for (name, want) in expected_i0 {
        let t = code(name);
        assert!((mean_from_raw(&raw_i0(), &t, 2) - want).abs() < 1e-12);
        let got = s0.mean_utility(&Assignment::from_indices(&t)).unwrap();
        assert!((got - want).abs() < 1e-12, "I0 {name}: {got}");
    }
    for (name, want) in expected_i1 {
        let t = code(name);
        assert!((mean_from_raw(&raw_i1(), &t, 2) - want).abs() < 1e-12);
        let got = s1.mean_utility(&Assignment::from_indices(&t)).unwrap();
        assert!((got - want).abs() < 1e-12, "I1 {name}: {got}");
    }
}

#[test]
fn all_idle_is_worth_nothing() {
    let s = i0::<f64>(1);
    assert_eq!(s.mean_utility(&s.all_idle()).unwrap(), 0.0);
}

#[test]
fn single_robot_single_task() {
    let s = CoalitionStructure::<f64>::new(
        generic_tasks(&["a"]),
        vec![vec![TaskId(0)]],
        TableUtility::new().with(&[0], 0, 7.0),
        vec![1],
        &[],
    )
    .unwrap();
    assert_eq!(s.n_productive_tasks(), 1);
    assert_eq!(s.mean_utility(&Assignment::from_indices(&[0])).unwrap(), 7.0);
}

#[test]
fn invalid_assignment_is_rejected() {
    let s = CoalitionStructure::<f64>::new(
        generic_tasks(&["a", "b"]),
        vec![vec![TaskId(0)], vec![TaskId(0), TaskId(1)]],
        TableUtility::new(),
        vec![1, 1],
        &complete_edges(2),
    )
    .unwrap();
    let err = s.mean_utility(&Assignment::from_indices(&[1, 1])).unwrap_err();
    assert_eq!(
        err,
        CoalitionError::InvalidAssignment {
            robot: RobotId(0),
            task: TaskId(1)
        }
    );
    assert!(matches!(
        s.mean_utility(&Assignment::from_indices(&[0])),
        Err(CoalitionError::WrongLength { .. })
    ));
}

#[test]
fn structure_validation() {
    let bad_k = CoalitionStructure::<f64>::new(
        generic_tasks(&["a"]),
        vec![vec![TaskId(0)]],
        TableUtility::new(),
        vec![0],
        &[],
    );
    assert!(matches!(bad_k, Err(CoalitionError::InvalidStructure(_))));
    let self_loop = CoalitionStructure::<f64>::new(
        generic_tasks(&["a"]),
        vec![vec![TaskId(0)]],
        TableUtility::new(),
        vec![1],
        &[(RobotId(0), RobotId(0))],
    );
    assert!(self_loop.is_err());
    let unknown_task = CoalitionStructure::<f64>::new(
        generic_tasks(&["a"]),
        vec![vec![TaskId(5)]],
        TableUtility::new(),
        vec![1],
        &[],
    );
    assert!(unknown_task.is_err());
    let s = i0::<f64>(1);
    assert_eq!(s.idle_task(), TaskId(2));
    assert!(s.robots().all(|r| s.can_perform(r, s.idle_task())));
}

#[test]
fn apply_switch_examples() {
    let s = i0::<f64>(1);
    let ab = Assignment::from_indices(&[0, 1]);
    let aa = s.apply_switch(&ab, Switch::new(1, 0)).unwrap();
    assert_eq!(aa, Assignment::from_indices(&[0, 0]));
    assert_eq!(aa.version(), ab.version() + 1);

    let same = s.apply_switch(&ab, Switch::new(0, 0)).unwrap();
    assert_eq!(same.tasks(), ab.tasks());

    assert_eq!(
        s.apply_switch(&ab, Switch::new(0, 9)),
        Err(CoalitionError::InvalidSwitch {
            robot: RobotId(0),
            task: TaskId(9)
        })
    );
}

#[test]
fn apply_chain_examples() {
    let s = i1::<f64>(2);
    let aa = Assignment::from_indices(&[0, 0]);
    let chain = ChainTransformation::from_switches([Switch::new(0, 1), Switch::new(1, 1)]);
    assert_eq!(s.apply_chain(&aa, &chain).unwrap(), Assignment::from_indices(&[1, 1]));
    assert_eq!(s.apply_chain(&aa, &ChainTransformation::empty()).unwrap(), aa);

    let sparse = CoalitionStructure::<f64>::new(
        generic_tasks(&["a", "b"]),
        vec![vec![A, B]; 3],
        TableUtility::new(),
        vec![3; 3],
        &[(RobotId(0), RobotId(1)), (RobotId(1), RobotId(2))],
    )
    .unwrap();
    let jump = ChainTransformation::from_switches([Switch::new(0, 1), Switch::new(2, 1)]);
    assert!(matches!(
        sparse.apply_chain(&Assignment::from_indices(&[0, 0, 0]), &jump),
        Err(CoalitionError::InvalidChain(_))
    ));
}

#[test]
fn validate_chain_examples() {
    let s = i1::<f64>(2);
    let chain = ChainTransformation::from_switches([Switch::new(0, 1), Switch::new(1, 1)]);
    assert!(s.validate_chain(&chain, RobotId(0), 2));
    assert!(!s.validate_chain(&chain, RobotId(0), 1));
    let from_two = ChainTransformation::from_switches([Switch::new(1, 1), Switch::new(0, 1)]);
    assert!(!s.validate_chain(&from_two, RobotId(0), 2));
    let repeat = ChainTransformation::from_switches([
        Switch::new(0, 1),
        Switch::new(1, 1),
        Switch::new(0, 0),
    ]);
    assert!(!s.validate_chain(&repeat, RobotId(0), 3));
    assert!(!s.validate_chain(&ChainTransformation::empty(), RobotId(0), 2));
}

#[test]
fn delta_utility_examples() {
    let s0 = i0::<f64>(1);
    let ab = Assignment::from_indices(&[0, 1]);
    assert!((s0.delta_utility(&ab, Switch::new(1, 0)).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(s0.delta_utility(&ab, Switch::new(1, 1)).unwrap(), 0.0);

    let s1 = i1::<f64>(1);
    let aa = Assignment::from_indices(&[0, 0]);
    assert!((s1.delta_utility(&aa, Switch::new(0, 1)).unwrap() + 0.05).abs() < 1e-12);
}

#[test]
fn marginal_utility_examples() {
    let s = i0::<f64>(1);
    let both = [RobotId(0), RobotId(1)];
    assert_eq!(s.marginal_utility(&both, RobotId(1), A).unwrap(), 3.0);
    assert_eq!(s.marginal_utility(&[RobotId(0)], RobotId(0), A).unwrap(), 2.0);
    assert_eq!(s.marginal_utility(&both, RobotId(0), s.idle_task()).unwrap(), 0.0);
    assert_eq!(
        s.marginal_utility(&[RobotId(0)], RobotId(1), A),
        Err(CoalitionError::NotInCoalition { robot: RobotId(1) })
    );
}

#[test]
fn json_round_trip_preserves_structure() {
    let s = i1::<f64>(2);
    let text = s.to_json().unwrap();
    let back = CoalitionStructure::<f64>::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.k_indices(), &[2, 2]);
    assert_eq!(back.idle_task(), s.idle_task());
    for t in ["aa", "ab", "ba", "bb"] {
        let a = Assignment::from_indices(&t.bytes().map(|b| (b - b'a') as usize).collect::<Vec<_>>());
        assert_eq!(s.mean_utility(&a).unwrap(), back.mean_utility(&a).unwrap());
    }
}

#[test]
fn json_defaults_and_custom_tabulation() {
    let text = r#"{"robots": 2, "tasks": [{"name": "a"}],
        "utility": {"type": "table", "entries": [{"coalition": [1, 0], "task": 0, "value": 3.0}]}}"#;
    let s = CoalitionStructure::<f64>::from_json(text).unwrap();
    assert_eq!(s.n_tasks(), 2);
    assert!(s.are_neighbors(RobotId(0), RobotId(1)));
    assert_eq!(s.mean_utility(&Assignment::from_indices(&[0, 0])).unwrap(), 3.0);

    let custom = CoalitionStructure::<f64>::new(
        generic_tasks(&["a"]),
        vec![vec![A]; 3],
        UtilityModel::custom(|c: &[RobotId], _t: TaskId| c.len() as f64),
        vec![1; 3],
        &complete_edges(3),
    )
    .unwrap();
    let table = custom.tabulate().unwrap();
    assert_eq!(table.len(), 7);
    let back = CoalitionStructure::<f64>::from_json(&custom.to_json().unwrap()).unwrap();
    assert_eq!(back.mean_utility(&Assignment::from_indices(&[0, 0, 1])).unwrap(), 2.0);

    assert!(CoalitionStructure::<f64>::from_json("{not json").is_err());
}

#[test]
fn works_in_single_precision() {
    let s = i1::<f32>(2);
    let v = s.mean_utility(&Assignment::from_indices(&[1, 1])).unwrap();
    assert!((v - 2.0f32).abs() < 1e-6);
}

fn random_structure(
    n: usize,
    m: usize,
    values: &[f64],
) -> (CoalitionStructure<f64>, Vec<usize>) {
    let names: Vec<String> = (0..m).map(|t| format!("t{t}")).collect();
    let mut table = TableUtility::new();
    let mut it = values.iter().cycle();
    for task in 0..m {
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
            table = table.with(&members, task, *it.next().unwrap());
        }
    }
    let all: Vec<TaskId> = (0..m).map(TaskId).collect();
    let s = CoalitionStructure::new(
        generic_tasks(&names),
        vec![all; n],
        table,
        vec![n; n],
        &complete_edges(n),
    )
    .unwrap();
    (s, (0..n).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn delta_matches_recomputed_mean(
        n in 1usize..=8,
        m in 1usize..=5,
        values in prop::collection::vec(0.0f64..10.0, 16),
        seed_tasks in prop::collection::vec(0usize..6, 8),
        robot in 0usize..8,
        task in 0usize..6,
    ) {
        let (s, _) = random_structure(n, m, &values);
        let task_of: Vec<usize> = seed_tasks[..n].iter().map(|t| t % (m + 1)).collect();
        let a = Assignment::from_indices(&task_of);
        let sw = Switch::new(robot % n, task % (m + 1));
        let before = s.mean_utility(&a).unwrap();
        let after = s.mean_utility(&s.apply_switch(&a, sw).unwrap()).unwrap();
        let delta = s.delta_utility(&a, sw).unwrap();
        prop_assert!((after - before - delta).abs() <= 1e-12);

        // Coalitions partition the robots.
        let total: usize = a.coalitions(s.n_tasks()).iter().map(Vec::len).sum();
        prop_assert_eq!(total, n);

        // Switching back restores the task map.
        let back = s.apply_switch(&s.apply_switch(&a, sw).unwrap(), Switch { robot: sw.robot, task: a.task_of(sw.robot) }).unwrap();
        prop_assert_eq!(back.tasks(), a.tasks());
    }

    #[test]
    fn chain_utility_is_sum_of_sequential_deltas(
        n in 2usize..=6,
        m in 1usize..=4,
        values in prop::collection::vec(0.0f64..10.0, 16),
        order in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        tasks in prop::collection::vec(0usize..5, 6),
        len in 1usize..=6,
    ) {
        let (s, _) = random_structure(n, m, &values);
        let robots: Vec<usize> = order.into_iter().filter(|&r| r < n).take(len).collect();
        let chain = ChainTransformation::from_switches(
            robots.iter().zip(&tasks).map(|(&r, &t)| Switch::new(r, t % (m + 1))));
        let base = s.all_idle();
        let mut cur = base.clone();
        let mut acc = s.mean_utility(&base).unwrap();
        for sw in &chain.switches {
            acc += s.delta_utility(&cur, *sw).unwrap();
            cur = s.apply_switch(&cur, *sw).unwrap();
        }
        let direct = s.mean_utility(&s.apply_chain(&base, &chain).unwrap()).unwrap();
        prop_assert!((direct - acc).abs() <= 1e-9);
    }
}
