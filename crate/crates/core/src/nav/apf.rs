//! Artificial potential field velocity: attraction to the goal plus
//! repulsion from every pooled LiDAR sector inside the influence distance.

use crate::geometry::Vec2;
use crate::policy::MAX_LINEAR_SPEED;
use crate::sensors::PooledScan;
use crate::sim::{Pose2D, Velocity2D};

pub const K_ATTRACT: f64 = 1.0;
pub const K_REPULSE: f64 = 0.05;
pub const INFLUENCE_DISTANCE: f64 = 0.5;

fn sector_direction(i: usize) -> Vec2 {
    Vec2::from_angle(PooledScan::sector_bearing(i))
}

pub fn apf_velocity(pose: &Pose2D, goal: Vec2, scan: &PooledScan) -> Velocity2D {
    let mut force = pose.to_local(goal - pose.position()) * K_ATTRACT;
    for (i, &d) in scan.d_l.iter().enumerate() {
        if d < INFLUENCE_DISTANCE {
            let mag = K_REPULSE * (1.0 / d - 1.0 / INFLUENCE_DISTANCE) / (d * d);
            force -= sector_direction(i) * mag;
        }
    }
    Velocity2D::new(
        force.x.clamp(-MAX_LINEAR_SPEED, MAX_LINEAR_SPEED),
        force.y.clamp(-MAX_LINEAR_SPEED, MAX_LINEAR_SPEED),
        0.0,
    )
}
