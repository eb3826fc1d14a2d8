//! Territory-defense tasks: capture, defense and exploration utilities, and
//! the coalition problem built from a world snapshot.
//!
//! Saturation points, past which adding a robot never adds more than the
//! previous one did:
//! - capture: once the coalition blocks every sampled escape ray;
//! - defense: once the proximity-weighted headcount reaches the number of
//!   encirclement slots;
//! - exploration: everywhere, for scouts of equal speed.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Mutex;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::coalition::{
    CoalitionStructure, RobotId, TaskDescriptor, TaskId, TaskKind, UtilityFunction, UtilityModel,
};
use crate::geometry::{ray_interception, Point2, Rect};
use crate::netsim::disk_topology;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtilityParams {
    pub w_capture: f64,
    pub w_defense: f64,
    pub w_exploration: f64,
    /// Escape directions sampled around a target.
    pub rays: usize,
    /// Escape path length checked along each ray, meters.
    pub escape_horizon: f64,
    /// Capture range `d_c`, meters.
    pub capture_range: f64,
    /// Decay length of a defender's contribution outside its ring, meters.
    pub proximity_scale: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            w_capture: 1.0,
            w_defense: 1.0,
            w_exploration: 0.5,
            rays: 64,
            escape_horizon: 20.0,
            capture_range: 3.0,
            proximity_scale: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Scout,
    Swat,
    Target,
}

/// What a utility needs to know about one robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub team: Team,
    pub pos: Point2<f64>,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureTask {
    pub target_id: usize,
    pub target_pos: Point2<f64>,
    pub target_speed: f64,
    /// Fastest straight-line arrival of any team pursuer, seconds.
    pub urgency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenseTask {
    pub cluster_center: Point2<f64>,
    pub cluster_spread: f64,
    pub resource_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTask {
    pub region: Rect<f64>,
    /// Seconds since a scout was last inside the region.
    pub staleness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorldTask {
    Capture(CaptureTask),
    Defense(DefenseTask),
    Exploration(ExplorationTask),
}

/// Fraction of `rays` evenly spaced escape directions that some member can
/// cut off within the escape horizon.
pub fn capture_coverage(members: &[Agent], task: &CaptureTask, params: &UtilityParams) -> f64 {
    if members.is_empty() || params.rays == 0 {
        return 0.0;
    }
    let blocked = (0..params.rays)
        .filter(|&j| {
            let dir = Point2::from_polar(1.0, TAU * j as f64 / params.rays as f64);
            members.iter().any(|m| {
                ray_interception(
                    task.target_pos,
                    task.target_speed,
                    dir,
                    m.pos,
                    m.speed,
                    params.escape_horizon,
                )
                .is_some()
            })
        })
        .count();
    blocked as f64 / params.rays as f64
}

/// `w_c · g / (1 + t*)` with `g` the escape coverage and `t*` the task's
/// urgency. Zero when every member is slower than the target and some
/// escape ray stays open.
pub fn capture_utility(members: &[Agent], task: &CaptureTask, params: &UtilityParams) -> f64 {
    let g = capture_coverage(members, task, params);
    if g < 1.0 && members.iter().all(|m| m.speed < task.target_speed) {
        return 0.0;
    }
    params.w_capture * g / (1.0 + task.urgency.max(0.0))
}

/// Encirclement slots needed around a cluster: `⌈2π(spread + d_c) / 2d_c⌉`.
pub fn required_defenders(task: &DefenseTask, params: &UtilityParams) -> usize {
    let d_c = params.capture_range;
    ((TAU * (task.cluster_spread + d_c)) / (2.0 * d_c)).ceil().max(1.0) as usize
}

/// Radius of the defense ring around a cluster center.
pub fn defense_ring_radius(task: &DefenseTask, params: &UtilityParams) -> f64 {
    task.cluster_spread + params.capture_range
}

/// A defender's weight: 1 on or inside the ring, decaying outside it.
pub fn defense_proximity(member: &Agent, task: &DefenseTask, params: &UtilityParams) -> f64 {
    let gap = member.pos.distance(task.cluster_center) - defense_ring_radius(task, params);
    (-gap.max(0.0) / params.proximity_scale).exp()
}

/// `w_d · R · min(1, Σ proximity / n_req)`.
pub fn defense_utility(members: &[Agent], task: &DefenseTask, params: &UtilityParams) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let weighted: f64 = members.iter().map(|m| defense_proximity(m, task, params)).sum();
    let n_req = required_defenders(task, params) as f64;
    params.w_defense * task.resource_count as f64 * (weighted / n_req).min(1.0)
}

/// `w_e · staleness · (1 − 1 / (1 + Σ speed / diagonal))`.
pub fn exploration_utility(members: &[Agent], task: &ExplorationTask, params: &UtilityParams) -> f64 {
    let diag = task.region.diagonal();
    if members.is_empty() || diag <= 0.0 {
        return 0.0;
    }
    let rate: f64 = members.iter().map(|m| m.speed).sum::<f64>() / diag;
    params.w_exploration * task.staleness.max(0.0) * (1.0 - 1.0 / (1.0 + rate))
}

pub fn task_utility(members: &[Agent], task: &WorldTask, params: &UtilityParams) -> f64 {
    match task {
        WorldTask::Capture(t) => capture_utility(members, t, params),
        WorldTask::Defense(t) => defense_utility(members, t, params),
        WorldTask::Exploration(t) => exploration_utility(members, t, params),
    }
}

/// Coalition utility over a fixed snapshot, memoized per coalition.
#[derive(Debug)]
pub struct WorldUtility {
    agents: Vec<Agent>,
    tasks: Vec<WorldTask>,
    params: UtilityParams,
    cache: Mutex<HashMap<(usize, u128), f64>>,
}

impl WorldUtility {
    pub fn new(agents: Vec<Agent>, tasks: Vec<WorldTask>, params: UtilityParams) -> Self {
        Self {
            agents,
            tasks,
            params,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn compute(&self, coalition: &[RobotId], task: TaskId) -> f64 {
        let Some(t) = self.tasks.get(task.0) else {
            return 0.0;
        };
        let members: Vec<Agent> = coalition.iter().filter_map(|r| self.agents.get(r.0).copied()).collect();
        task_utility(&members, t, &self.params)
    }
}

impl UtilityFunction<f64> for WorldUtility {
    fn evaluate(&self, coalition: &[RobotId], task: TaskId) -> f64 {
        if coalition.iter().any(|r| r.0 >= 128) {
            return self.compute(coalition, task);
        }
        let mask = coalition.iter().fold(0u128, |m, r| m | 1u128 << r.0);
        let key = (task.0, mask);
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return v;
        }
        let v = self.compute(coalition, task);
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }
}

/// A cluster found by [`kmeans`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Point2<f64>,
    /// RMS distance of members to the center.
    pub spread: f64,
    pub count: usize,
}

/// Lloyd's algorithm with `min(k, n)` centers. Initial centers are the
/// first point, then repeatedly the point farthest from the chosen ones,
/// so the result is a function of the input order alone. Empty clusters
/// are dropped.
pub fn kmeans(points: &[Point2<f64>], k: usize, iterations: usize) -> Vec<Cluster> {
    let k = k.min(points.len());
    if k == 0 {
        return Vec::new();
    }
    let mut centers = vec![points[0]];
    while centers.len() < k {
        let far = points
            .iter()
            .copied()
            .max_by(|a, b| {
                let da = centers.iter().map(|c| a.distance(*c)).fold(f64::INFINITY, f64::min);
                let db = centers.iter().map(|c| b.distance(*c)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .expect("non-empty");
        centers.push(far);
    }
    let nearest = |p: &Point2<f64>, centers: &[Point2<f64>]| {
        (0..centers.len())
            .min_by(|&a, &b| p.distance(centers[a]).total_cmp(&p.distance(centers[b])))
            .expect("non-empty")
    };
    let mut label = vec![0usize; points.len()];
    for _ in 0..iterations.max(1) {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let l = nearest(p, &centers);
            changed |= l != label[i];
            label[i] = l;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<Point2<f64>> = points.iter().zip(&label).filter(|(_, &l)| l == c).map(|(p, _)| *p).collect();
            if !members.is_empty() {
                let sum = members.iter().fold(Point2::origin(), |acc, p| acc + *p);
                *center = sum * (1.0 / members.len() as f64);
            }
        }
        if !changed {
            break;
        }
    }
    centers
        .iter()
        .enumerate()
        .filter_map(|(c, center)| {
            let members: Vec<&Point2<f64>> = points.iter().zip(&label).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                return None;
            }
            let ms = members.iter().map(|p| p.distance(*center).powi(2)).sum::<f64>() / members.len() as f64;
            Some(Cluster {
                center: *center,
                spread: ms.sqrt(),
                count: members.len(),
            })
        })
        .collect()
}

/// The `rows × cols` grid of equal regions covering `workspace`.
pub fn grid_regions(workspace: Rect<f64>, cols: usize, rows: usize) -> Vec<Rect<f64>> {
    let (cols, rows) = (cols.max(1), rows.max(1));
    let (w, h) = (workspace.width() / cols as f64, workspace.height() / rows as f64);
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let min = Point2::new(workspace.min.x + c as f64 * w, workspace.min.y + r as f64 * h);
            out.push(Rect::new(min, min + Point2::new(w, h)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSighting {
    pub id: usize,
    pub pos: Point2<f64>,
    pub speed: f64,
}

/// What the team knows at a planning instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Planning robots, swat and scouts; index `i` becomes robot `i`.
    pub robots: Vec<Agent>,
    /// Detected, not yet captured targets.
    pub targets: Vec<TargetSighting>,
    pub resources: Vec<Point2<f64>>,
    pub regions: Vec<ExplorationTask>,
    pub comm_radius: f64,
    pub k: usize,
    pub params: UtilityParams,
}

/// Stable identity of a task across re-planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKey {
    Capture(usize),
    Defense(usize),
    Exploration(usize),
    Idle,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub structure: CoalitionStructure<f64>,
    /// `tasks[m]` is task `m`; idle is last and has no entry.
    pub tasks: Vec<WorldTask>,
    /// One key per task including idle.
    pub keys: Vec<TaskKey>,
}

impl Problem {
    pub fn task_by_key(&self, key: TaskKey) -> Option<TaskId> {
        self.keys.iter().position(|&k| k == key).map(TaskId)
    }
}

/// Communication edges: disk graph among swat, scouts all linked, and each
/// scout linked to its nearest swat within `radius`.
pub fn planning_edges(robots: &[Agent], radius: f64) -> Vec<(RobotId, RobotId)> {
    let swat: Vec<usize> = (0..robots.len()).filter(|&i| robots[i].team == Team::Swat).collect();
    let scouts: Vec<usize> = (0..robots.len()).filter(|&i| robots[i].team == Team::Scout).collect();
    let swat_pos: Vec<Point2<f64>> = swat.iter().map(|&i| robots[i].pos).collect();
    let mut edges: Vec<(RobotId, RobotId)> = disk_topology(&swat_pos, radius)
        .edges()
        .into_iter()
        .map(|(a, b)| (RobotId(swat[a.0]), RobotId(swat[b.0])))
        .collect();
    for (x, &a) in scouts.iter().enumerate() {
        for &b in &scouts[x + 1..] {
            edges.push((RobotId(a), RobotId(b)));
        }
        let nearest = swat
            .iter()
            .copied()
            .filter(|&s| robots[s].pos.distance(robots[a].pos) <= radius)
            .min_by(|&p, &q| {
                robots[p].pos.distance(robots[a].pos).total_cmp(&robots[q].pos.distance(robots[a].pos))
            });
        if let Some(s) = nearest {
            edges.push((RobotId(s.min(a)), RobotId(s.max(a))));
        }
    }
    edges
}

/// Tasks and coalition structure for the current snapshot. Swat can
/// capture or defend, scouts can explore.
pub fn build_problem(snap: &Snapshot) -> Problem {
    let mut tasks = Vec::new();
    let mut keys = Vec::new();
    let mut descriptors = Vec::new();
    let mut push = |task: WorldTask, key: TaskKey, kind: TaskKind, name: String, tasks: &mut Vec<WorldTask>| {
        descriptors.push(TaskDescriptor {
            id: TaskId(tasks.len()),
            kind,
            name,
        });
        tasks.push(task);
        keys.push(key);
    };

    let swat_agents: Vec<&Agent> = snap.robots.iter().filter(|a| a.team == Team::Swat).collect();
    for t in &snap.targets {
        let urgency = swat_agents
            .iter()
            .filter(|a| a.speed > 0.0)
            .map(|a| a.pos.distance(t.pos) / a.speed)
            .fold(f64::INFINITY, f64::min);
        let task = CaptureTask {
            target_id: t.id,
            target_pos: t.pos,
            target_speed: t.speed,
            urgency: if urgency.is_finite() { urgency } else { f64::MAX },
        };
        push(WorldTask::Capture(task), TaskKey::Capture(t.id), TaskKind::Capture, format!("capture-{}", t.id), &mut tasks);
    }
    let mut clusters = kmeans(&snap.resources, 3, 50);
    clusters.sort_by(|a, b| a.center.x.total_cmp(&b.center.x).then(a.center.y.total_cmp(&b.center.y)));
    for (c, cl) in clusters.iter().enumerate() {
        let task = DefenseTask {
            cluster_center: cl.center,
            cluster_spread: cl.spread,
            resource_count: cl.count,
        };
        push(WorldTask::Defense(task), TaskKey::Defense(c), TaskKind::Defense, format!("defense-{c}"), &mut tasks);
    }
    for (r, region) in snap.regions.iter().enumerate() {
        push(WorldTask::Exploration(*region), TaskKey::Exploration(r), TaskKind::Exploration, format!("explore-{r}"), &mut tasks);
    }
    keys.push(TaskKey::Idle);

    let capabilities: Vec<Vec<TaskId>> = snap
        .robots
        .iter()
        .map(|a| {
            tasks
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    matches!(
                        (a.team, t),
                        (Team::Swat, WorldTask::Capture(_) | WorldTask::Defense(_))
                            | (Team::Scout, WorldTask::Exploration(_))
                    )
                })
                .map(|(m, _)| TaskId(m))
                .collect()
        })
        .collect();
    let edges = planning_edges(&snap.robots, snap.comm_radius);
    let utility = UtilityModel::custom(WorldUtility::new(snap.robots.clone(), tasks.clone(), snap.params));
    let structure = CoalitionStructure::new(
        descriptors,
        capabilities,
        utility,
        vec![snap.k.max(1); snap.robots.len()],
        &edges,
    )
    .expect("snapshot problem is well formed");
    if structure.components().len() > 1 {
        debug!("planning graph is disconnected ({} components)", structure.components().len());
    }
    Problem {
        structure,
        tasks,
        keys,
    }
}
