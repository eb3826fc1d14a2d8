//! Territory-defense simulator.
//!
//! Swat robots and scouts share a rectangular workspace with adversarial
//! targets that collect resources spawned from a Gaussian mixture. The team
//! periodically re-forms coalitions over capture, defense and exploration
//! tasks with the coalition engine and executes the result with simple
//! unicycle controllers. Everything is driven by one seeded RNG, so a
//! scenario replays exactly.

pub mod config;
pub mod gmm;
pub mod kinematics;
pub mod motion;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{PerTeam, ScenarioConfig, TeamSizes, Workspace};
pub use gmm::{sample_resource, GmmComponent, GmmParams};
pub use kinematics::{go_to, step_unicycle, wrap_angle, Input, Pose};

use crate::coalition::{Assignment, RobotId};
use crate::engine::{self, EngineConfig, EngineError, Heuristic};
use crate::geometry::{Point2, Rect};
use crate::netsim::NetConfig;
use crate::tasks::{
    build_problem, defense_ring_radius, grid_regions, Agent, ExplorationTask, Problem, Snapshot, TargetSighting,
    TaskKey, Team, UtilityParams, WorldTask,
};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Captured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: usize,
    pub team: Team,
    pub pose: Pose,
    pub speed: f64,
    pub sensing: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: usize,
    pub pos: Point2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub captured: u64,
    pub taken: u64,
}

impl Score {
    /// Captured targets minus resources taken.
    pub fn value(&self) -> i64 {
        self.captured as i64 - self.taken as i64
    }
}

/// One line of the per-step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time after the step.
    pub time: u64,
    pub captured: u64,
    pub taken: u64,
    pub score: i64,
    pub active_targets: usize,
    pub resources: usize,
    pub replanned: bool,
    /// Team utility of the plan made this step, if any.
    pub plan_utility: Option<f64>,
    pub plan_rounds: usize,
    pub plan_messages: u64,
    pub plan_converged: Option<bool>,
    /// Current task of every planning robot.
    pub tasks: Vec<TaskKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub steps: u64,
    pub coordination: bool,
    pub captured: u64,
    pub taken: u64,
    pub score: i64,
    pub resources_spawned: u64,
    pub resources_left: usize,
    pub replans: u64,
    pub unconverged_replans: u64,
    pub total_plan_rounds: u64,
    pub total_plan_messages: u64,
    /// Mean team utility over all plans, 0 without any.
    pub mean_plan_utility: f64,
}

/// Pose of one body at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: u64,
    pub id: usize,
    pub team: Team,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub steps: Vec<StepRecord>,
    pub summary: Summary,
    pub trace: Vec<TraceRow>,
}

impl RunOutput {
    pub fn steps_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("time,id,team,x,y,theta,status\n");
        for r in &self.trace {
            let team = match r.team {
                Team::Swat => "swat",
                Team::Scout => "scout",
                Team::Target => "target",
            };
            let status = match r.status {
                Status::Active => "active",
                Status::Captured => "captured",
            };
            let _ = writeln!(out, "{},{},{},{},{},{},{}", r.time, r.id, team, r.x, r.y, r.theta, status);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Walk {
    heading: f64,
    left: u64,
}

#[derive(Debug, Clone, Copy)]
struct Sweep {
    region: usize,
    next: usize,
}

/// Full simulator state. Bodies are ordered swat, scouts, targets, so the
/// first `n_planners()` ids double as robot ids in the coalition problem.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub time: u64,
    pub bodies: Vec<Body>,
    pub resources: Vec<Resource>,
    pub score: Score,
    /// Last seen position of every target the team has detected.
    pub known_targets: BTreeMap<usize, Point2<f64>>,
    pub known_resources: BTreeMap<usize, Point2<f64>>,
    /// Current task of each planning robot.
    pub tasks: Vec<TaskKey>,
    pub regions: Vec<Rect<f64>>,
    region_seen: Vec<f64>,
    plan_tasks: Vec<(TaskKey, WorldTask)>,
    walks: Vec<Walk>,
    sweeps: Vec<Option<Sweep>>,
    rng: ChaCha8Rng,
    capture_event: bool,
    next_resource: usize,
    spawned: u64,
    replans: u64,
    unconverged: u64,
    plan_rounds: u64,
    plan_messages: u64,
    plan_utility_sum: f64,
}

impl World {
    pub fn new(config: ScenarioConfig) -> Result<Self, WorldError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bounds = config.workspace.rect();
        let mut bodies = Vec::new();
        let teams = [
            (Team::Swat, config.teams.swat, config.speeds.swat, config.sensing.swat),
            (Team::Scout, config.teams.scouts, config.speeds.scout, config.sensing.scout),
            (Team::Target, config.teams.targets, config.speeds.target, config.sensing.target),
        ];
        for (team, count, speed, sensing) in teams {
            for _ in 0..count {
                let x = rng.random_range(bounds.min.x..=bounds.max.x);
                let y = rng.random_range(bounds.min.y..=bounds.max.y);
                let theta = rng.random_range(-PI..PI);
                bodies.push(Body {
                    id: bodies.len(),
                    team,
                    pose: Pose::new(x, y, theta),
                    speed,
                    sensing,
                    status: Status::Active,
                });
            }
        }
        let walks = (0..config.teams.targets)
            .map(|_| Walk {
                heading: rng.random_range(-PI..PI),
                left: config.target_persistence,
            })
            .collect();
        let regions = grid_regions(bounds, config.regions[0], config.regions[1]);
        let n_planners = config.teams.swat + config.teams.scouts;
        Ok(Self {
            time: 0,
            bodies,
            resources: Vec::new(),
            score: Score::default(),
            known_targets: BTreeMap::new(),
            known_resources: BTreeMap::new(),
            tasks: vec![TaskKey::Idle; n_planners],
            region_seen: vec![-config.initial_staleness; regions.len()],
            regions,
            plan_tasks: Vec::new(),
            walks,
            sweeps: vec![None; n_planners],
            rng,
            capture_event: false,
            next_resource: 0,
            spawned: 0,
            replans: 0,
            unconverged: 0,
            plan_rounds: 0,
            plan_messages: 0,
            plan_utility_sum: 0.0,
            config,
        })
    }

    pub fn n_planners(&self) -> usize {
        self.config.teams.swat + self.config.teams.scouts
    }

    fn params(&self) -> UtilityParams {
        UtilityParams {
            capture_range: self.config.capture_range,
            ..self.config.utility
        }
    }

    pub fn add_resource(&mut self, pos: Point2<f64>) -> usize {
        let id = self.next_resource;
        self.next_resource += 1;
        self.resources.push(Resource { id, pos });
        id
    }

    /// Overrides the current plan. Unknown keys simply produce no motion.
    pub fn set_tasks(&mut self, tasks: Vec<TaskKey>, plan_tasks: Vec<(TaskKey, WorldTask)>) {
        assert_eq!(tasks.len(), self.n_planners());
        self.tasks = tasks;
        self.plan_tasks = plan_tasks;
    }

    pub fn active_targets(&self) -> usize {
        self.bodies
            .iter()
            .filter(|b| b.team == Team::Target && b.status == Status::Active)
            .count()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            seed: self.config.seed,
            steps: self.time,
            coordination: self.config.coordination,
            captured: self.score.captured,
            taken: self.score.taken,
            score: self.score.value(),
            resources_spawned: self.spawned,
            resources_left: self.resources.len(),
            replans: self.replans,
            unconverged_replans: self.unconverged,
            total_plan_rounds: self.plan_rounds,
            total_plan_messages: self.plan_messages,
            mean_plan_utility: if self.replans == 0 {
                0.0
            } else {
                self.plan_utility_sum / self.replans as f64
            },
        }
    }

    pub fn trace_rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.bodies.iter().map(|b| TraceRow {
            time: self.time,
            id: b.id,
            team: b.team,
            x: b.pose.x,
            y: b.pose.y,
            theta: b.pose.theta,
            status: b.status,
        })
    }

    /// Sense, plan if due, move, spawn, capture, take, advance time.
    pub fn step(&mut self) -> Result<StepRecord, WorldError> {
        self.sense();
        let due = self.time.is_multiple_of(self.config.replan_period) || self.capture_event;
        let plan = if self.config.coordination && due {
            Some(self.replan()?)
        } else {
            None
        };
        self.capture_event = false;
        self.move_bodies();
        if (self.time + 1).is_multiple_of(self.config.resource_period) {
            let p = sample_resource(&self.config.gmm, &self.config.workspace.rect(), &mut self.rng);
            self.add_resource(p);
            self.spawned += 1;
        }
        self.resolve_captures();
        self.resolve_takes();
        self.time += 1;
        let (plan_utility, plan_rounds, plan_messages, plan_converged) = match plan {
            Some(p) => (Some(p.utility), p.rounds, p.messages, Some(p.converged)),
            None => (None, 0, 0, None),
        };
        Ok(StepRecord {
            time: self.time,
            captured: self.score.captured,
            taken: self.score.taken,
            score: self.score.value(),
            active_targets: self.active_targets(),
            resources: self.resources.len(),
            replanned: plan_utility.is_some(),
            plan_utility,
            plan_rounds,
            plan_messages,
            plan_converged,
            tasks: self.tasks.clone(),
        })
    }

    fn sense(&mut self) {
        let n = self.n_planners();
        for i in 0..n {
            let (p, r) = (self.bodies[i].pose.position(), self.bodies[i].sensing);
            for b in &self.bodies[n..] {
                if b.status == Status::Active && b.pose.position().distance(p) <= r {
                    self.known_targets.insert(b.id, b.pose.position());
                }
            }
            for res in &self.resources {
                if res.pos.distance(p) <= r {
                    self.known_resources.insert(res.id, res.pos);
                }
            }
            if self.bodies[i].team == Team::Scout {
                for (region, seen) in self.regions.iter().zip(self.region_seen.iter_mut()) {
                    if region.contains(p) {
                        *seen = self.time as f64;
                    }
                }
            }
        }
        let alive: Vec<usize> = self.resources.iter().map(|r| r.id).collect();
        self.known_resources.retain(|id, _| alive.contains(id));
        let bodies = &self.bodies;
        self.known_targets.retain(|&id, _| bodies[id].status == Status::Active);
    }

    fn snapshot(&self) -> Snapshot {
        let n = self.n_planners();
        Snapshot {
            robots: self.bodies[..n]
                .iter()
                .map(|b| Agent {
                    team: b.team,
                    pos: b.pose.position(),
                    speed: b.speed,
                })
                .collect(),
            targets: self
                .known_targets
                .iter()
                .map(|(&id, &pos)| TargetSighting {
                    id,
                    pos,
                    speed: self.bodies[id].speed,
                })
                .collect(),
            resources: self.known_resources.values().copied().collect(),
            regions: self
                .regions
                .iter()
                .zip(&self.region_seen)
                .map(|(&region, &seen)| ExplorationTask {
                    region,
                    staleness: self.time as f64 - seen,
                })
                .collect(),
            comm_radius: self.config.comm_radius,
            k: self.config.k,
            params: self.params(),
        }
    }

    fn replan(&mut self) -> Result<PlanOutcome, WorldError> {
        let problem: Problem = build_problem(&self.snapshot());
        let s = &problem.structure;
        let previous = Assignment::from_tasks(
            self.tasks
                .iter()
                .enumerate()
                .map(|(i, &key)| {
                    problem
                        .task_by_key(key)
                        .filter(|&t| s.can_perform(RobotId(i), t))
                        .unwrap_or_else(|| s.idle_task())
                })
                .collect(),
        );
        let cfg = EngineConfig {
            max_rounds: self.config.engine_max_rounds,
            rng_seed: self.config.seed ^ self.time.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..EngineConfig::default()
        };
        let net = NetConfig {
            rng_seed: self.config.seed,
            ..NetConfig::default()
        };
        let sol = engine::run_to_convergence(s, &net, &cfg, &Heuristic::fixed(previous), None)?;
        self.tasks = (0..self.n_planners())
            .map(|i| problem.keys[sol.assignment.task_of(RobotId(i)).0])
            .collect();
        self.plan_tasks = problem.keys.iter().copied().zip(problem.tasks.iter().copied()).collect();
        self.replans += 1;
        self.plan_utility_sum += sol.utility;
        if !sol.converged {
            self.unconverged += 1;
        }
        let rounds = sol.stats.rounds_to_converge;
        self.plan_rounds += rounds as u64;
        self.plan_messages += sol.stats.total_messages;
        debug!(
            "t={} replan: rho={:.4} rounds={} messages={}",
            self.time, sol.utility, rounds, sol.stats.total_messages
        );
        Ok(PlanOutcome {
            utility: sol.utility,
            rounds,
            messages: sol.stats.total_messages,
            converged: sol.converged,
        })
    }

    /// Members of `key` sorted by id, and the slot of robot `i` among them.
    fn slot(&self, key: TaskKey, i: usize) -> (usize, usize) {
        let members: Vec<usize> = (0..self.tasks.len()).filter(|&j| self.tasks[j] == key).collect();
        let slot = members.iter().position(|&j| j == i).unwrap_or(0);
        (slot, members.len())
    }

    fn planner_input(&mut self, i: usize) -> Input {
        let body = self.bodies[i];
        let turn = self.config.max_turn_rate;
        let key = self.tasks[i];
        if !matches!(key, TaskKey::Exploration(_)) {
            self.sweeps[i] = None;
        }
        match key {
            TaskKey::Idle => Input::ZERO,
            TaskKey::Capture(t) => match self.known_targets.get(&t) {
                Some(&pos) => {
                    let (slot, n) = self.slot(key, i);
                    let goal = motion::capture_goal(pos, slot, n, self.config.capture_range);
                    go_to(body.pose, goal, body.speed, turn, 1.0)
                }
                None => Input::ZERO,
            },
            TaskKey::Defense(_) => {
                let Some(WorldTask::Defense(task)) = self.plan_tasks.iter().find(|(k, _)| *k == key).map(|(_, t)| *t) else {
                    return Input::ZERO;
                };
                let (slot, n) = self.slot(key, i);
                let ring = defense_ring_radius(&task, &self.params());
                let goal = motion::defense_goal(task.cluster_center, ring, slot, n);
                go_to(body.pose, goal, body.speed, turn, 1.0)
            }
            TaskKey::Exploration(r) => {
                let Some(region) = self.regions.get(r).copied() else {
                    return Input::ZERO;
                };
                let wps = motion::sweep_waypoints(&region, body.sensing);
                let pos = body.pose.position();
                let mut sweep = match self.sweeps[i] {
                    Some(s) if s.region == r => s,
                    _ => Sweep {
                        region: r,
                        next: motion::nearest_waypoint(&wps, pos),
                    },
                };
                if pos.distance(wps[sweep.next]) < motion::waypoint_tolerance(body.speed, 1.0) {
                    sweep.next = (sweep.next + 1) % wps.len();
                }
                self.sweeps[i] = Some(sweep);
                go_to(body.pose, wps[sweep.next], body.speed, turn, 1.0)
            }
        }
    }

    fn target_input(&mut self, idx: usize) -> Input {
        let body = self.bodies[idx];
        let pos = body.pose.position();
        let n = self.n_planners();
        let walk = &mut self.walks[idx - n];
        let nearest = self
            .resources
            .iter()
            .map(|r| r.pos)
            .filter(|r| r.distance(pos) <= body.sensing)
            .min_by(|a, b| a.distance(pos).total_cmp(&b.distance(pos)));
        let attract = match nearest {
            Some(r) if r.distance(pos) > 1e-9 => (r - pos).normalized(),
            Some(_) => Point2::origin(),
            None => {
                if walk.left == 0 {
                    walk.heading = self.rng.random_range(-PI..PI);
                    walk.left = self.config.target_persistence;
                }
                walk.left -= 1;
                Point2::from_polar(1.0, walk.heading)
            }
        };
        let mut push = Point2::origin();
        for b in &self.bodies[..self.config.teams.swat] {
            let d = b.pose.position().distance(pos);
            if d <= body.sensing && d > 1e-9 {
                let gain = self.config.repulsion_gain * (1.0 - d / body.sensing.max(1e-9));
                push = push + (pos - b.pose.position()).normalized() * gain;
            }
        }
        let dir = attract + push;
        if dir.norm() < 1e-9 {
            return Input::ZERO;
        }
        let goal = pos + dir.normalized() * body.speed;
        go_to(body.pose, goal, body.speed, self.config.max_turn_rate, 1.0)
    }

    fn move_bodies(&mut self) {
        let n = self.n_planners();
        let inputs: Vec<Input> = (0..self.bodies.len())
            .map(|i| {
                if i < n {
                    self.planner_input(i)
                } else if self.bodies[i].status == Status::Active {
                    self.target_input(i)
                } else {
                    Input::ZERO
                }
            })
            .collect();
        let bounds = self.config.workspace.rect();
        for (b, u) in self.bodies.iter_mut().zip(inputs) {
            b.pose = step_unicycle(b.pose, u, 1.0, &bounds);
        }
    }

    fn resolve_captures(&mut self) {
        let n_swat = self.config.teams.swat;
        let hunters: Vec<Point2<f64>> = (0..n_swat)
            .filter(|&i| matches!(self.tasks[i], TaskKey::Capture(_)))
            .map(|i| self.bodies[i].pose.position())
            .collect();
        let d_c = self.config.capture_range;
        let n = self.n_planners();
        for b in self.bodies[n..].iter_mut() {
            if b.status == Status::Active && hunters.iter().any(|h| h.distance(b.pose.position()) <= d_c) {
                b.status = Status::Captured;
                self.score.captured += 1;
                self.capture_event = true;
                info!("t={} target {} captured", self.time, b.id);
            }
        }
    }

    fn resolve_takes(&mut self) {
        let d_s = self.config.take_range;
        let takers: Vec<Point2<f64>> = self.bodies[self.n_planners()..]
            .iter()
            .filter(|b| b.status == Status::Active)
            .map(|b| b.pose.position())
            .collect();
        let before = self.resources.len();
        self.resources.retain(|r| takers.iter().all(|t| t.distance(r.pos) > d_s));
        self.score.taken += (before - self.resources.len()) as u64;
    }
}

struct PlanOutcome {
    utility: f64,
    rounds: usize,
    messages: u64,
    converged: bool,
}

/// Runs a scenario for its full horizon.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, WorldError> {
    let mut world = World::new(config.clone())?;
    let mut trace: Vec<TraceRow> = world.trace_rows().collect();
    let mut steps = Vec::with_capacity(config.horizon as usize);
    for _ in 0..config.horizon {
        steps.push(world.step()?);
        trace.extend(world.trace_rows());
    }
    Ok(RunOutput {
        steps,
        summary: world.summary(),
        trace,
    })
}
