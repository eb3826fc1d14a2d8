use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in `(-π, π]`.
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// Forward speed and turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Input {
    pub v: f64,
    pub omega: f64,
}

impl Input {
    pub const ZERO: Input = Input { v: 0.0, omega: 0.0 };
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Exact unicycle integration over `dt`: a circular arc when turning, a
/// straight segment otherwise. The position is clamped to `bounds`.
pub fn step_unicycle(pose: Pose, input: Input, dt: f64, bounds: &Rect<f64>) -> Pose {
    let Input { v, omega } = input;
    let theta1 = pose.theta + omega * dt;
    let (x, y) = if omega.abs() < 1e-12 {
        (pose.x + v * dt * pose.theta.cos(), pose.y + v * dt * pose.theta.sin())
    } else {
        let r = v / omega;
        (pose.x + r * (theta1.sin() - pose.theta.sin()), pose.y - r * (theta1.cos() - pose.theta.cos()))
    };
    let p = bounds.clamp(Point2::new(x, y));
    Pose::new(p.x, p.y, wrap_angle(theta1))
}

/// Turn toward `goal` at up to `max_turn` rad/s, driving forward in the
/// same step by however much the heading error left after the turn allows.
/// Never overshoots a goal straight ahead.
pub fn go_to(pose: Pose, goal: Point2<f64>, max_speed: f64, max_turn: f64, dt: f64) -> Input {
    let delta = goal - pose.position();
    let dist = delta.norm();
    if dist < 1e-9 {
        return Input::ZERO;
    }
    let err = wrap_angle(delta.angle() - pose.theta);
    let omega = (err / dt).clamp(-max_turn, max_turn);
    let residual = err - omega * dt;
    let v = max_speed.min(dist / dt) * residual.cos().max(0.0);
    Input { v, omega }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open() -> Rect<f64> {
        Rect::new(Point2::new(-100.0, -100.0), Point2::new(100.0, 100.0))
    }

    fn close(a: Pose, b: Pose) -> bool {
        (a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9 && (a.theta - b.theta).abs() < 1e-9
    }

    #[test]
    fn straight_line() {
        let p = step_unicycle(Pose::new(0.0, 0.0, 0.0), Input { v: 1.0, omega: 0.0 }, 1.0, &open());
        assert!(close(p, Pose::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn turn_in_place() {
        let p = step_unicycle(Pose::new(0.0, 0.0, 0.0), Input { v: 0.0, omega: PI }, 1.0, &open());
        assert!(close(p, Pose::new(0.0, 0.0, PI)));
    }

    #[test]
    fn quarter_arc() {
        let p = step_unicycle(Pose::new(0.0, 0.0, 0.0), Input { v: 1.0, omega: PI / 2.0 }, 1.0, &open());
        assert!(close(p, Pose::new(2.0 / PI, 2.0 / PI, PI / 2.0)));
    }

    #[test]
    fn clamped_to_bounds() {
        let b = Rect::new(Point2::origin(), Point2::new(1.0, 1.0));
        let p = step_unicycle(Pose::new(0.5, 0.5, 0.0), Input { v: 5.0, omega: 0.0 }, 1.0, &b);
        assert_eq!((p.x, p.y), (1.0, 0.5));
    }

    #[test]
    fn go_to_lands_on_goal_when_facing_it() {
        let pose = Pose::new(0.0, 0.0, 0.0);
        let u = go_to(pose, Point2::new(0.4, 0.0), 1.0, PI, 1.0);
        assert!((u.v - 0.4).abs() < 1e-12 && u.omega == 0.0);
        let behind = go_to(pose, Point2::new(-3.0, 0.0), 1.0, PI / 4.0, 1.0);
        assert_eq!(behind.v, 0.0);
        assert!((behind.omega.abs() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
