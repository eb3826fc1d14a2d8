use serde::{Deserialize, Serialize};

use super::gmm::{GmmComponent, GmmParams};
use super::WorldError;
use crate::geometry::{Point2, Rect};
use crate::tasks::UtilityParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

impl Workspace {
    pub fn rect(&self) -> Rect<f64> {
        Rect::new(Point2::origin(), Point2::new(self.width, self.height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamSizes {
    pub swat: usize,
    pub scouts: usize,
    pub targets: usize,
}

/// One value per team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerTeam {
    pub swat: f64,
    pub scout: f64,
    pub target: f64,
}

/// Scenario file. Every field is optional in JSON; missing ones take the
/// 40 × 40 m desk defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub workspace: Workspace,
    pub teams: TeamSizes,
    /// m/s.
    pub speeds: PerTeam,
    /// Sensing radii, m.
    pub sensing: PerTeam,
    /// `d_c`, m.
    pub capture_range: f64,
    /// `d_s`, m.
    pub take_range: f64,
    /// A resource appears every this many steps.
    pub resource_period: u64,
    pub gmm: GmmParams,
    /// Exploration grid as `[columns, rows]`.
    pub regions: [usize; 2],
    pub replan_period: u64,
    pub horizon: u64,
    pub seed: u64,
    /// Swat-to-swat and scout-to-swat link range, m.
    pub comm_radius: f64,
    /// Uniform chain budget for re-planning.
    pub k: usize,
    /// With `false` nobody plans and every planner stays idle.
    pub coordination: bool,
    /// Age assigned to every region at time zero, s.
    pub initial_staleness: f64,
    /// rad/s.
    pub max_turn_rate: f64,
    /// Steps a target keeps a random-walk heading.
    pub target_persistence: u64,
    /// Strength of a target's push away from nearby swat.
    pub repulsion_gain: f64,
    pub engine_max_rounds: usize,
    pub utility: UtilityParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let cov = [[0.75 * 0.75, 0.0], [0.0, 0.75 * 0.75]];
        let component = |x: f64, y: f64| GmmComponent {
            weight: 1.0 / 3.0,
            mean: [x, y],
            cov,
        };
        Self {
            workspace: Workspace {
                width: 40.0,
                height: 40.0,
            },
            teams: TeamSizes {
                swat: 10,
                scouts: 3,
                targets: 5,
            },
            speeds: PerTeam {
                swat: 1.0,
                scout: 6.0,
                target: 0.9,
            },
            sensing: PerTeam {
                swat: 5.0,
                scout: 10.0,
                target: 8.0,
            },
            capture_range: 3.0,
            take_range: 2.0,
            resource_period: 5,
            gmm: GmmParams {
                components: vec![component(10.0, 30.0), component(30.0, 28.0), component(20.0, 10.0)],
            },
            regions: [3, 3],
            replan_period: 5,
            horizon: 200,
            seed: 42,
            comm_radius: 15.0,
            k: 2,
            coordination: true,
            initial_staleness: 60.0,
            max_turn_rate: std::f64::consts::PI,
            target_persistence: 20,
            repulsion_gain: 2.0,
            engine_max_rounds: 500,
            utility: UtilityParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| WorldError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |what: &str| Err(WorldError::Config(what.to_string()));
        if !(self.workspace.width > 0.0 && self.workspace.height > 0.0) {
            return bad("workspace dimensions must be positive");
        }
        for v in [self.speeds.swat, self.speeds.scout, self.speeds.target] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("speeds must be finite and non-negative");
            }
        }
        for v in [self.sensing.swat, self.sensing.scout, self.sensing.target] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("sensing radii must be finite and non-negative");
            }
        }
        if !(self.capture_range > 0.0 && self.take_range > 0.0) {
            return bad("capture and take ranges must be positive");
        }
        if self.resource_period == 0 || self.replan_period == 0 {
            return bad("periods must be positive");
        }
        if self.regions[0] == 0 || self.regions[1] == 0 {
            return bad("region grid must be at least 1 x 1");
        }
        if self.k == 0 || self.engine_max_rounds == 0 {
            return bad("k and engine_max_rounds must be positive");
        }
        if self.teams.swat + self.teams.scouts > 128 {
            return bad("at most 128 planning robots");
        }
        if self.target_persistence == 0 {
            return bad("target_persistence must be positive");
        }
        self.gmm.validate()
    }
}
