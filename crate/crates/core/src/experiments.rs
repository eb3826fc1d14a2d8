//! Random instance families, engine-versus-oracle verification and the `k`
//! sweep benchmark.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coalition::{
    complete_edges, generic_tasks, Assignment, CoalitionStructure, RobotId, SaturatingUtility, TableUtility, TaskId,
};
use crate::engine::{run_to_convergence, EngineConfig, EngineError, Heuristic, RunStats, Solution};
use crate::geometry::Point2;
use crate::netsim::{disk_topology, NetConfig};
use crate::oracle::{self, OracleError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UtilityKind {
    /// Independent uniform value in `[0, 10)` for every coalition and task.
    Table,
    /// [`SaturatingUtility`] with values in `[5, 15)` and skills in `[0.1, 0.6)`.
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphKind {
    Complete,
    /// Random spanning tree plus each remaining edge with probability `p`.
    Connected { p: f64 },
    /// Uniform positions in a `side × side` square, resampled until the
    /// disk graph is connected.
    Disk { side: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KKind {
    Uniform(usize),
    /// Independent per robot in `1..=max`.
    Random { max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n_robots: usize,
    pub n_tasks: usize,
    pub utility: UtilityKind,
    pub graph: GraphKind,
    pub k: KKind,
    /// Productive tasks per robot; `None` means all of them.
    pub capabilities: Option<usize>,
}

impl InstanceSpec {
    /// Table utility on a random connected graph, every robot capable of
    /// every task, `k = 1`.
    pub fn small(n_robots: usize, n_tasks: usize) -> Self {
        Self {
            n_robots,
            n_tasks,
            utility: UtilityKind::Table,
            graph: GraphKind::Connected { p: 0.3 },
            k: KKind::Uniform(1),
            capabilities: None,
        }
    }

    /// The sweep family: 20 robots, 8 tasks, disk graph, saturating
    /// utility, three productive tasks per robot.
    pub fn bench_family() -> Self {
        Self {
            n_robots: 20,
            n_tasks: 8,
            utility: UtilityKind::Saturating,
            graph: GraphKind::Disk {
                side: 100.0,
                radius: 35.0,
            },
            k: KKind::Uniform(1),
            capabilities: Some(3),
        }
    }
}

/// Draws one instance. Equal `(spec, seed)` give equal instances.
pub fn random_instance<S: Scalar>(spec: &InstanceSpec, seed: u64) -> CoalitionStructure<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (spec.n_robots, spec.n_tasks);
    let names: Vec<String> = (0..m).map(|t| format!("t{t}")).collect();

    let caps: Vec<Vec<TaskId>> = (0..n)
        .map(|_| match spec.capabilities {
            Some(c) if c < m => {
                let mut v: Vec<TaskId> = sample(&mut rng, m, c).into_iter().map(TaskId).collect();
                v.sort_unstable();
                v
            }
            _ => (0..m).map(TaskId).collect(),
        })
        .collect();

    let k = match spec.k {
        KKind::Uniform(c) => vec![c.max(1); n],
        KKind::Random { max } => (0..n).map(|_| rng.random_range(1..=max.max(1))).collect(),
    };

    let edges = match spec.graph {
        GraphKind::Complete => complete_edges(n),
        GraphKind::Connected { p } => {
            let mut edges = Vec::new();
            for i in 1..n {
                edges.push((RobotId(rng.random_range(0..i)), RobotId(i)));
            }
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((RobotId(i), RobotId(j)));
                    }
                }
            }
            edges
        }
        GraphKind::Disk { side, radius } => loop {
            let pts: Vec<Point2<f64>> = (0..n)
                .map(|_| Point2::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
                .collect();
            let topo = disk_topology(&pts, radius);
            if topo.is_connected() {
                break topo.edges();
            }
        },
    };

    let tasks = generic_tasks(&names);
    match spec.utility {
        UtilityKind::Table => {
            let mut table = TableUtility::new();
            for mask in 1u64..(1u64 << n) {
                let members: Vec<RobotId> = (0..n).filter(|i| mask >> i & 1 == 1).map(RobotId).collect();
                for t in 0..m {
                    if members.iter().all(|r| caps[r.0].contains(&TaskId(t))) {
                        table.set(&members, TaskId(t), S::lit(rng.random_range(0.0..10.0)));
                    }
                }
            }
            CoalitionStructure::new(tasks, caps, table, k, &edges)
        }
        UtilityKind::Saturating => {
            let value = (0..m).map(|_| S::lit(rng.random_range(5.0..15.0))).collect();
            let skill = (0..n)
                .map(|_| (0..m).map(|_| S::lit(rng.random_range(0.1..0.6))).collect())
                .collect();
            CoalitionStructure::new(tasks, caps, SaturatingUtility { value, skill }, k, &edges)
        }
    }
    .expect("generated instance is well formed")
}

/// A uniformly random valid assignment.
pub fn random_assignment<S: Scalar>(s: &CoalitionStructure<S>, rng: &mut impl Rng) -> Assignment {
    Assignment::from_tasks(
        s.robots()
            .map(|r| {
                let caps = s.capabilities(r);
                caps[rng.random_range(0..caps.len())]
            })
            .collect(),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Outcome of one engine run checked against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCase {
    pub name: String,
    pub n_robots: usize,
    pub n_tasks: usize,
    pub k_indices: Vec<usize>,
    pub utility: f64,
    pub optimal_utility: Option<f64>,
    pub rounds: usize,
    pub messages: u64,
    pub converged: bool,
    pub agreed: bool,
    pub kss: bool,
    /// Only checked when every `k_i = 1`.
    pub nash: Option<bool>,
    /// Every robot's best-utility trace is non-decreasing.
    pub monotone: bool,
    /// Per-robot strict improvements stay within `Δρ / ε + 1`.
    pub epsilon_bound: bool,
    /// Only checked on complete graphs with every `k_i ≥ N`.
    pub optimal: Option<bool>,
}

impl VerifyCase {
    pub fn passed(&self) -> bool {
        self.converged
            && self.agreed
            && self.kss
            && self.monotone
            && self.epsilon_bound
            && self.nash != Some(false)
            && self.optimal != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub cases: Vec<VerifyCase>,
    pub elapsed_secs: f64,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &VerifyCase> {
        self.cases.iter().filter(|c| !c.passed())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// True iff no robot's entry in the trace ever decreases.
pub fn trace_monotone<S: Scalar>(stats: &RunStats<S>) -> bool {
    stats.utility_trace.windows(2).all(|w| {
        w[0].best_utilities
            .iter()
            .zip(&w[1].best_utilities)
            .all(|(a, b)| b >= a)
    })
}

/// True iff every robot's strict-improvement count is at most
/// `(ρ_final − ρ_initial) / ε + 1`.
pub fn epsilon_bound_holds<S: Scalar>(stats: &RunStats<S>, epsilon: S) -> bool {
    let gain = (stats.final_utility - stats.initial_utility).as_f64();
    let eps = epsilon.as_f64();
    stats
        .improvements_per_agent
        .iter()
        .all(|&c| eps <= 0.0 || c as f64 <= gain / eps + 1.0)
}

/// Runs the engine on `s` from `warm` and checks the result.
pub fn verify_instance<S: Scalar>(
    name: &str,
    s: &CoalitionStructure<S>,
    warm: &Heuristic,
    cfg: &EngineConfig<S>,
) -> Result<(VerifyCase, Solution<S>), ExperimentError> {
    let sol = run_to_convergence(s, &NetConfig::default(), cfg, warm, None)?;
    let stable = oracle::is_kss(&sol.assignment, s)?;
    let all_one = s.k_indices().iter().all(|&k| k == 1);
    let nash = if all_one {
        Some(oracle::is_nash_stable(&sol.assignment, s)?)
    } else {
        None
    };
    let n = s.n_robots();
    let complete = s.edges().len() == n * n.saturating_sub(1) / 2;
    let (optimal_utility, optimal) = if complete && s.k_indices().iter().all(|&k| k >= n) {
        let (_, opt) = oracle::brute_force_optimal(s)?;
        let opt = opt.as_f64();
        (Some(opt), Some((sol.utility.as_f64() - opt).abs() <= 1e-9))
    } else {
        (None, None)
    };
    let case = VerifyCase {
        name: name.to_string(),
        n_robots: n,
        n_tasks: s.n_productive_tasks(),
        k_indices: s.k_indices().to_vec(),
        utility: sol.utility.as_f64(),
        optimal_utility,
        rounds: sol.stats.rounds_to_converge,
        messages: sol.stats.total_messages,
        converged: sol.converged,
        agreed: sol.agreed,
        kss: stable.is_kss,
        nash,
        monotone: trace_monotone(&sol.stats),
        epsilon_bound: epsilon_bound_holds(&sol.stats, cfg.epsilon),
        optimal,
    };
    Ok((case, sol))
}

/// Settings for a batch of random verification cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyPlan {
    pub count: usize,
    pub max_robots: usize,
    pub max_tasks: usize,
    pub seed: u64,
    /// Complete graph with `k_i = N`, checking global optimality as well.
    pub complete: bool,
}

impl VerifyPlan {
    pub fn new(count: usize, max_robots: usize) -> Self {
        Self {
            count,
            max_robots,
            max_tasks: 4,
            seed: 0,
            complete: false,
        }
    }
}

/// The `index`-th instance and warm start of `plan`.
pub fn plan_case<S: Scalar>(plan: &VerifyPlan, index: usize) -> (CoalitionStructure<S>, Heuristic) {
    let case_seed = plan.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let n = rng.random_range(1..=plan.max_robots.max(1));
    let m = rng.random_range(1..=plan.max_tasks.max(1));
    let spec = InstanceSpec {
        graph: if plan.complete {
            GraphKind::Complete
        } else {
            GraphKind::Connected { p: 0.3 }
        },
        k: if plan.complete {
            KKind::Uniform(n)
        } else {
            KKind::Random { max: 3 }
        },
        ..InstanceSpec::small(n, m)
    };
    let s = random_instance::<S>(&spec, rng.random());
    let warm = match index % 3 {
        0 => Heuristic::default(),
        1 => Heuristic::greedy_marginal(),
        _ => Heuristic::fixed(random_assignment(&s, &mut rng)),
    };
    (s, warm)
}

pub fn verify_random(plan: &VerifyPlan) -> Result<VerifyReport, ExperimentError> {
    let start = Instant::now();
    let cfg = EngineConfig::<f64>::default();
    let mut cases = Vec::with_capacity(plan.count);
    for index in 0..plan.count {
        let (s, warm) = plan_case::<f64>(plan, index);
        let (case, _) = verify_instance(&format!("random-{index}"), &s, &warm, &cfg)?;
        cases.push(case);
    }
    Ok(VerifyReport {
        cases,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub family: InstanceSpec,
    pub seeds: usize,
    pub base_seed: u64,
    pub ks: Vec<usize>,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            family: InstanceSpec::bench_family(),
            seeds: 30,
            base_seed: 0,
            ks: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub mean_utility: f64,
    pub mean_rounds: f64,
    pub mean_messages: f64,
    pub wall_secs: f64,
    pub utilities: Vec<f64>,
    pub converged: usize,
}

/// Solves every seed of the family under each uniform `k`, from all-Idle.
pub fn bench(plan: &BenchPlan) -> Result<Vec<BenchRow>, ExperimentError> {
    let cfg = EngineConfig::<f64>::default();
    let instances: Vec<CoalitionStructure<f64>> = (0..plan.seeds)
        .map(|i| random_instance(&plan.family, plan.base_seed.wrapping_add(i as u64)))
        .collect();
    let mut rows = Vec::new();
    for &k in &plan.ks {
        let start = Instant::now();
        let warm = Heuristic::uniform_k(k);
        let mut utilities = Vec::new();
        let (mut rounds, mut messages, mut converged) = (0usize, 0u64, 0usize);
        for s in &instances {
            let sol = run_to_convergence(s, &NetConfig::default(), &cfg, &warm, None)?;
            utilities.push(sol.utility);
            rounds += sol.stats.rounds_to_converge;
            messages += sol.stats.total_messages;
            converged += usize::from(sol.converged);
        }
        let count = instances.len().max(1) as f64;
        rows.push(BenchRow {
            k,
            mean_utility: utilities.iter().sum::<f64>() / count,
            mean_rounds: rounds as f64 / count,
            mean_messages: messages as f64 / count,
            wall_secs: start.elapsed().as_secs_f64(),
            utilities,
            converged,
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("k,mean_final_utility,mean_rounds,mean_messages,wall_secs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.9},{:.3},{:.3},{:.3}\n",
            r.k, r.mean_utility, r.mean_rounds, r.mean_messages, r.wall_secs
        ));
    }
    out
}
