use std::f64::consts::PI;

use crate::geometry::{Point2, Rect};

/// Lawn-mower lanes across `region`, spaced so adjacent sensor footprints
/// of radius `sensing` just touch.
pub fn sweep_waypoints(region: &Rect<f64>, sensing: f64) -> Vec<Point2<f64>> {
    let (w, h) = (region.width(), region.height());
    let r = sensing.max(1e-6);
    let lanes = ((w / (2.0 * r)).ceil() as usize).max(1);
    let inset = r.min(h / 2.0);
    let (lo, hi) = (region.min.y + inset, region.max.y - inset);
    let mut out = Vec::with_capacity(2 * lanes);
    for i in 0..lanes {
        let x = if lanes == 1 {
            region.center().x
        } else {
            region.min.x + r + i as f64 * (w - 2.0 * r) / (lanes - 1) as f64
        };
        let (a, b) = if i % 2 == 0 { (lo, hi) } else { (hi, lo) };
        out.push(Point2::new(x, a));
        out.push(Point2::new(x, b));
    }
    out
}

pub fn nearest_waypoint(waypoints: &[Point2<f64>], p: Point2<f64>) -> usize {
    (0..waypoints.len())
        .min_by(|&a, &b| waypoints[a].distance(p).total_cmp(&waypoints[b].distance(p)))
        .unwrap_or(0)
}

/// Distance at which a sweeping robot moves on to its next waypoint.
pub fn waypoint_tolerance(speed: f64, dt: f64) -> f64 {
    (0.5 * speed * dt).max(0.05)
}

/// Slot `j` of `n` pursuers on a target. A lone pursuer aims straight at the
/// target; several spread around it at half the capture range.
pub fn capture_goal(target: Point2<f64>, slot: usize, n: usize, capture_range: f64) -> Point2<f64> {
    if n <= 1 {
        return target;
    }
    target + Point2::from_polar(0.5 * capture_range, 2.0 * PI * slot as f64 / n as f64)
}

/// Slot `j` of `n` defenders evenly spaced on a ring.
pub fn defense_goal(center: Point2<f64>, ring_radius: f64, slot: usize, n: usize) -> Point2<f64> {
    center + Point2::from_polar(ring_radius, 2.0 * PI * slot as f64 / n.max(1) as f64)
}
