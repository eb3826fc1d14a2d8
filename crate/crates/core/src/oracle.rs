//! Exhaustive reference solvers for small instances.
//!
//! Stability here uses the same chain rules as the engine: every switch
//! changes its robot's task, consecutive robots are neighbors, and no robot
//! appears twice. Chains are scored by recomputing `ρ` from scratch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coalition::{Assignment, ChainTransformation, CoalitionError, CoalitionStructure, RobotId, Switch, TaskId};
use crate::Scalar;

/// Largest search space, in assignments or chains, the oracle will walk.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Minimum gain that makes a chain improving.
pub const ORACLE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("search space of {0} exceeds the oracle limit")]
    TooLarge(u64),
    #[error(transparent)]
    Coalition(#[from] CoalitionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct KssVerdict<S> {
    pub is_kss: bool,
    /// An improving rooted chain, present iff not stable.
    pub witness: Option<ChainTransformation>,
    /// `ρ` after applying the witness.
    pub witness_utility: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OracleReport<S> {
    pub assignment: Assignment,
    pub utility: S,
    pub optimal_assignment: Assignment,
    pub optimal_utility: S,
    pub is_kss: bool,
    pub witness: Option<ChainTransformation>,
}

/// Number of valid total maps, saturating.
pub fn search_space<S: Scalar>(s: &CoalitionStructure<S>) -> u64 {
    s.robots()
        .map(|r| s.capabilities(r).len() as u64)
        .fold(1u64, u64::saturating_mul)
}

/// Best assignment by exhaustive enumeration. Among equal utilities the
/// lexicographically smallest task map wins.
pub fn brute_force_optimal<S: Scalar>(s: &CoalitionStructure<S>) -> Result<(Assignment, S), OracleError> {
    let size = search_space(s);
    if size > MAX_ENUMERATION {
        return Err(OracleError::TooLarge(size));
    }
    let n = s.n_robots();
    let caps: Vec<&[TaskId]> = s.robots().map(|r| s.capabilities(r)).collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Assignment, S)> = None;
    loop {
        let a = Assignment::from_tasks((0..n).map(|i| caps[i][idx[i]]).collect());
        let u = s.mean_utility(&a)?;
        // Enumeration is lexicographic, so strict `>` keeps the smallest tie.
        if best.as_ref().is_none_or(|(_, bu)| u > *bu) {
            best = Some((a, u));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.expect("at least one assignment"));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < caps[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Checks that no robot `i` has a rooted chain of length `≤ k_i` raising
/// `ρ(a)` by more than [`ORACLE_EPSILON`].
pub fn is_kss<S: Scalar>(a: &Assignment, s: &CoalitionStructure<S>) -> Result<KssVerdict<S>, OracleError> {
    let base = s.mean_utility(a)?;
    let mut search = ChainSearch {
        s,
        threshold: base + S::lit(ORACLE_EPSILON),
        visited: 0,
    };
    for root in s.robots() {
        let mut chain = Vec::new();
        if let Some((w, u)) = search.dfs(a, &mut chain, root, s.k_of(root))? {
            return Ok(KssVerdict {
                is_kss: false,
                witness: Some(w),
                witness_utility: Some(u),
            });
        }
    }
    Ok(KssVerdict {
        is_kss: true,
        witness: None,
        witness_utility: None,
    })
}

/// [`is_kss`] with every `k_i = 1`.
pub fn is_nash_stable<S: Scalar>(a: &Assignment, s: &CoalitionStructure<S>) -> Result<bool, OracleError> {
    let s1 = s.with_k(vec![1; s.n_robots()])?;
    Ok(is_kss(a, &s1)?.is_kss)
}

/// Optimum plus the stability verdict for `a`.
pub fn report<S: Scalar>(a: &Assignment, s: &CoalitionStructure<S>) -> Result<OracleReport<S>, OracleError> {
    let (optimal_assignment, optimal_utility) = brute_force_optimal(s)?;
    let verdict = is_kss(a, s)?;
    Ok(OracleReport {
        assignment: a.clone(),
        utility: s.mean_utility(a)?,
        optimal_assignment,
        optimal_utility,
        is_kss: verdict.is_kss,
        witness: verdict.witness,
    })
}

/// Hill climbing on single switches: apply the best improving switch over
/// all robots (lowest robot, then lowest task on ties) until none is left.
pub fn greedy_nash_baseline<S: Scalar>(
    s: &CoalitionStructure<S>,
    warm: &Assignment,
) -> Result<Assignment, OracleError> {
    let mut cur = warm.clone();
    let mut cur_u = s.mean_utility(&cur)?;
    loop {
        let mut best: Option<(Assignment, S)> = None;
        for r in s.robots() {
            for &task in s.capabilities(r) {
                if task == cur.task_of(r) {
                    continue;
                }
                let next = s.apply_switch(&cur, Switch { robot: r, task })?;
                let u = s.mean_utility(&next)?;
                let bar = best.as_ref().map_or(cur_u + S::lit(ORACLE_EPSILON), |(_, bu)| *bu);
                if u > bar {
                    best = Some((next, u));
                }
            }
        }
        match best {
            Some((next, u)) => {
                cur = next;
                cur_u = u;
            }
            None => return Ok(cur),
        }
    }
}

struct ChainSearch<'a, S> {
    s: &'a CoalitionStructure<S>,
    threshold: S,
    visited: u64,
}

impl<S: Scalar> ChainSearch<'_, S> {
    /// Tries every effective switch of `robot` on `cur`, then extends
    /// through each neighbor not yet in the chain.
    fn dfs(
        &mut self,
        cur: &Assignment,
        chain: &mut Vec<Switch>,
        robot: RobotId,
        budget: usize,
    ) -> Result<Option<(ChainTransformation, S)>, OracleError> {
        let s = self.s;
        for &task in s.capabilities(robot) {
            if task == cur.task_of(robot) {
                continue;
            }
            self.visited += 1;
            if self.visited > MAX_ENUMERATION {
                return Err(OracleError::TooLarge(self.visited));
            }
            let sw = Switch { robot, task };
            let next = s.apply_switch(cur, sw)?;
            chain.push(sw);
            let u = s.mean_utility(&next)?;
            if u > self.threshold {
                return Ok(Some((ChainTransformation::from_switches(chain.iter().copied()), u)));
            }
            if chain.len() < budget {
                for &nb in s.neighbors(robot) {
                    if chain.iter().any(|c| c.robot == nb) {
                        continue;
                    }
                    if let Some(found) = self.dfs(&next, chain, nb, budget)? {
                        return Ok(Some(found));
                    }
                }
            }
            chain.pop();
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::{complete_edges, generic_tasks, TableUtility};
    use crate::fixtures::{i0, i1, A, B};

    fn asg(t: &[usize]) -> Assignment {
        Assignment::from_indices(t)
    }

    #[test]
    fn brute_force_fixtures() {
        let (a, u) = brute_force_optimal(&i0::<f64>(1)).unwrap();
        assert_eq!(a, asg(&[0, 0]));
        assert!((u - 2.5).abs() < 1e-12);
        let (a, u) = brute_force_optimal(&i1::<f64>(1)).unwrap();
        assert_eq!(a, asg(&[1, 1]));
        assert!((u - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_single_robot() {
        let s = CoalitionStructure::<f64>::new(
            generic_tasks(&["a", "b"]),
            vec![vec![A, B]],
            TableUtility::new().with(&[0], 0, 5.0).with(&[0], 1, 3.0),
            vec![1],
            &[],
        )
        .unwrap();
        let (a, u) = brute_force_optimal(&s).unwrap();
        assert_eq!(a, asg(&[0]));
        // Two productive tasks, so ρ = 5 / 2.
        assert!((u - 2.5).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let n = 12;
        let names: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
        let s = CoalitionStructure::<f64>::new(
            generic_tasks(&names),
            vec![(0..4).map(TaskId).collect(); n],
            TableUtility::new(),
            vec![1; n],
            &complete_edges(n),
        )
        .unwrap();
        assert!(matches!(brute_force_optimal(&s), Err(OracleError::TooLarge(_))));
    }

    #[test]
    fn kss_fixtures() {
        let v = is_kss(&asg(&[0, 0]), &i1::<f64>(1)).unwrap();
        assert!(v.is_kss && v.witness.is_none());
        let v = is_kss(&asg(&[0, 0]), &i1::<f64>(2)).unwrap();
        assert!(!v.is_kss);
        assert_eq!(
            v.witness.unwrap(),
            ChainTransformation::from_switches([Switch::new(0, 1), Switch::new(1, 1)])
        );
        assert!((v.witness_utility.unwrap() - 2.0).abs() < 1e-12);
        for k in 1..=2 {
            assert!(is_kss(&asg(&[1, 1]), &i1::<f64>(k)).unwrap().is_kss);
        }
    }

    #[test]
    fn nash_fixtures() {
        let s = i0::<f64>(3);
        assert!(!is_nash_stable(&asg(&[0, 1]), &s).unwrap());
        assert!(is_nash_stable(&asg(&[0, 0]), &s).unwrap());
        assert!(!is_nash_stable(&s.all_idle(), &s).unwrap());
    }

    #[test]
    fn greedy_baseline_fixtures() {
        let s = i1::<f64>(1);
        assert_eq!(greedy_nash_baseline(&s, &asg(&[0, 0])).unwrap(), asg(&[0, 0]));
        assert_eq!(greedy_nash_baseline(&s, &asg(&[0, 1])).unwrap(), asg(&[1, 1]));
        let s0 = i0::<f64>(1);
        let out = greedy_nash_baseline(&s0, &asg(&[1, 1])).unwrap();
        assert_eq!(out, asg(&[0, 0]));
        assert!(is_nash_stable(&out, &s0).unwrap());
    }

    #[test]
    fn witness_improves_and_validates() {
        let s = i1::<f64>(2);
        let a = asg(&[0, 0]);
        let w = is_kss(&a, &s).unwrap().witness.unwrap();
        let root = w.root().unwrap();
        assert!(s.validate_chain(&w, root, s.k_of(root)));
        let after = s.apply_chain(&a, &w).unwrap();
        assert!(s.mean_utility(&after).unwrap() > s.mean_utility(&a).unwrap());
    }
}
