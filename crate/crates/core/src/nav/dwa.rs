//! Dynamic window approach for a holonomic base.

use super::grid::OccupancyGrid;
use super::NavError;
use crate::geometry::Vec2;
use crate::policy::{MAX_ANGULAR_SPEED, MAX_LINEAR_SPEED};
use crate::sim::{Pose2D, Velocity2D, CONTROL_DT, ROBOT_RADIUS};

pub const LINEAR_ACCEL: f64 = 1.0;
pub const ANGULAR_ACCEL: f64 = 2.0;
pub const SAMPLES_PER_AXIS: usize = 7;
pub const ROLLOUT_HORIZON: f64 = 1.5;
pub const ROLLOUT_DT: f64 = 0.1;
pub const HEADING_WEIGHT: f64 = 2.0;
pub const CLEARANCE_WEIGHT: f64 = 1.0;
pub const SPEED_WEIGHT: f64 = 0.5;
/// Clearance beyond this earns no extra score.
pub const CLEARANCE_CAP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub command: Velocity2D,
    pub poses: Vec<Pose2D>,
    pub min_clearance: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// The 7×7×7 command samples reachable from `vel` within one control period.
pub fn velocity_window(vel: &Velocity2D) -> Vec<Velocity2D> {
    let dv = LINEAR_ACCEL * CONTROL_DT;
    let dw = ANGULAR_ACCEL * CONTROL_DT;
    let range = |c: f64, d: f64, max: f64| ((c - d).max(-max), (c + d).min(max));
    let (x0, x1) = range(vel.vx, dv, MAX_LINEAR_SPEED);
    let (y0, y1) = range(vel.vy, dv, MAX_LINEAR_SPEED);
    let (w0, w1) = range(vel.wz, dw, MAX_ANGULAR_SPEED);
    let mut out = Vec::with_capacity(SAMPLES_PER_AXIS.pow(3));
    for vx in linspace(x0, x1, SAMPLES_PER_AXIS) {
        for vy in linspace(y0, y1, SAMPLES_PER_AXIS) {
            for wz in linspace(w0, w1, SAMPLES_PER_AXIS) {
                out.push(Velocity2D::new(vx, vy, wz));
            }
        }
    }
    out
}

/// Constant-command forward simulation over the rollout horizon.
pub fn simulate_rollout(pose: &Pose2D, cmd: &Velocity2D, grid: &OccupancyGrid) -> Rollout {
    let steps = (ROLLOUT_HORIZON / ROLLOUT_DT).round() as usize;
    let mut p = *pose;
    let mut poses = Vec::with_capacity(steps);
    let mut min_clearance = f64::INFINITY;
    for _ in 0..steps {
        let d = cmd.linear().rotate(p.theta) * ROLLOUT_DT;
        p = Pose2D::new(p.x + d.x, p.y + d.y, p.theta + cmd.wz * ROLLOUT_DT);
        min_clearance = min_clearance.min(grid.clearance_at(p.position()));
        poses.push(p);
    }
    Rollout {
        command: *cmd,
        poses,
        min_clearance,
    }
}

/// Clearance a rollout must keep everywhere: footprint plus inflation.
pub fn collision_clearance(grid: &OccupancyGrid) -> f64 {
    ROBOT_RADIUS + grid.inflation_radius
}

/// Score of an admissible rollout; `None` when it collides.
pub fn score_rollout(rollout: &Rollout, start: &Pose2D, goal: Vec2, grid: &OccupancyGrid) -> Option<f64> {
    if rollout.min_clearance < collision_clearance(grid) {
        return None;
    }
    let end = rollout.poses.last().map_or(start.position(), |p| p.position());
    let moved = end - start.position();
    let to_goal = goal - start.position();
    let heading = if moved.norm() > 0.0 && to_goal.norm() > 0.0 {
        (1.0 + moved.normalized().dot(to_goal.normalized())) / 2.0
    } else {
        0.0
    };
    let clearance = rollout.min_clearance.min(CLEARANCE_CAP);
    let speed = (rollout.command.linear().norm() / MAX_LINEAR_SPEED).min(1.0);
    Some(HEADING_WEIGHT * heading + CLEARANCE_WEIGHT * clearance + SPEED_WEIGHT * speed)
}

/// Best-scoring admissible command; ties keep the first sample in window order.
pub fn dwa_velocity(pose: &Pose2D, vel: &Velocity2D, goal: Vec2, grid: &OccupancyGrid) -> Result<Velocity2D, NavError> {
    let mut best: Option<(f64, Velocity2D)> = None;
    for cmd in velocity_window(vel) {
        let r = simulate_rollout(pose, &cmd, grid);
        if let Some(s) = score_rollout(&r, pose, goal, grid) {
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, cmd));
            }
        }
    }
    best.map(|(_, c)| c).ok_or(NavError::AllTrajectoriesCollide)
}
