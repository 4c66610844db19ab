//! LiDAR and tactile sensor models, and the 32-value normalized observation.

use crate::geometry::{ray_circle, ray_segment, wrap_angle, Vec2};
use crate::sim::{ContactSet, Pose2D, Velocity2D, World, MAX_PENETRATION, PLATE_COUNT};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const BEAM_COUNT: usize = 360;
pub const SECTOR_COUNT: usize = 18;
pub const BEAMS_PER_SECTOR: usize = BEAM_COUNT / SECTOR_COUNT;
pub const LIDAR_MAX_RANGE: f64 = 30.0;
pub const SCAN_NOISE_STD: f64 = 0.01;
pub const MIN_NOISY_RANGE: f64 = 0.001;
pub const GRAVITY: f64 = 9.81;
/// 10 kg load cell saturation.
pub const FORCE_SATURATION: f64 = 10.0 * GRAVITY;
/// Linear contact stiffness chosen so saturation coincides with the maximum
/// penetration the simulator allows.
pub const CONTACT_STIFFNESS: f64 = FORCE_SATURATION / MAX_PENETRATION;
pub const OBSERVATION_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SensorError {
    #[error("non-finite observation input: {0}")]
    NonFiniteInput(&'static str),
}

/// Normalization constants of the observation vector. Shipped alongside
/// checkpoints so a policy file is self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub range_max: f64,
    pub angle_max: f64,
    pub linear_velocity_max: f64,
    pub angular_velocity_max: f64,
    pub force_max: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            range_max: LIDAR_MAX_RANGE,
            angle_max: PI,
            linear_velocity_max: crate::policy::MAX_LINEAR_SPEED,
            angular_velocity_max: crate::policy::MAX_ANGULAR_SPEED,
            force_max: FORCE_SATURATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    /// Beam `k` points at bearing `k · 1°` in the robot frame.
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl LidarScan {
    pub fn beam_bearing(k: usize) -> f64 {
        k as f64 * (TAU / BEAM_COUNT as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledScan {
    pub d_l: [f64; SECTOR_COUNT],
}

impl PooledScan {
    /// Robot-frame bearing of the middle of sector `i`'s 20° span.
    pub fn sector_bearing(i: usize) -> f64 {
        wrap_angle((i as f64 + 0.5) * (TAU / SECTOR_COUNT as f64))
    }

    pub fn min(&self) -> f64 {
        self.d_l.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TactileReading {
    /// Newtons, one value per plate.
    pub f_c: [f64; PLATE_COUNT],
}

impl TactileReading {
    pub fn max(&self) -> f64 {
        self.f_c.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.f_c.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn any_contact(&self) -> bool {
        self.f_c.iter().any(|&f| f > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBSERVATION_LEN]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_f32(&self) -> [f32; OBSERVATION_LEN] {
        self.0.map(|v| v as f32)
    }
}

/// Nearest analytic hit of every beam against walls and obstacle discs.
pub fn lidar_scan(world: &World, pose: &Pose2D) -> LidarScan {
    let origin = pose.position();
    let ranges = (0..BEAM_COUNT)
        .map(|k| {
            let dir = Vec2::from_angle(pose.theta + LidarScan::beam_bearing(k));
            let mut best = LIDAR_MAX_RANGE;
            for w in &world.walls {
                if let Some(t) = ray_segment(origin, dir, w) {
                    best = best.min(t);
                }
            }
            for o in &world.obstacles {
                if let Some(t) = ray_circle(origin, dir, o.center, o.radius) {
                    best = best.min(t);
                }
            }
            best
        })
        .collect();
    LidarScan {
        ranges,
        max_range: LIDAR_MAX_RANGE,
    }
}

pub fn min_pool(scan: &LidarScan) -> PooledScan {
    assert_eq!(scan.ranges.len(), BEAM_COUNT, "scan must have {BEAM_COUNT} beams");
    let mut d_l = [0.0; SECTOR_COUNT];
    for (out, chunk) in d_l.iter_mut().zip(scan.ranges.chunks_exact(BEAMS_PER_SECTOR)) {
        *out = chunk.iter().copied().fold(f64::INFINITY, f64::min);
    }
    PooledScan { d_l }
}

/// Additive Gaussian range noise, clamped to `[MIN_NOISY_RANGE, LIDAR_MAX_RANGE]`.
pub fn apply_scan_noise<R: Rng + ?Sized>(pooled: &PooledScan, std_dev: f64, rng: &mut R) -> PooledScan {
    if std_dev == 0.0 {
        return *pooled;
    }
    let normal = Normal::new(0.0, std_dev).expect("finite noise std");
    let mut d_l = pooled.d_l;
    for v in &mut d_l {
        *v = (*v + normal.sample(rng)).clamp(MIN_NOISY_RANGE, LIDAR_MAX_RANGE);
    }
    PooledScan { d_l }
}

pub fn tactile_read(contacts: &ContactSet) -> TactileReading {
    let depth = contacts.max_per_plate();
    TactileReading {
        f_c: depth.map(|d| (CONTACT_STIFFNESS * d.max(0.0)).min(FORCE_SATURATION)),
    }
}

/// Goal heading in the robot frame, in (-π, π].
pub fn goal_heading(pose: &Pose2D, goal: Vec2) -> f64 {
    let delta = goal - pose.position();
    if delta.x == 0.0 && delta.y == 0.0 {
        return 0.0;
    }
    pose.bearing_to(goal)
}

/// Assembles `[d_g, θ_g, v_nav, v_prev, F_c, d_l]`, each normalized and clamped to [-1, 1].
pub fn build_observation(
    pose: &Pose2D,
    goal: Vec2,
    v_nav: &Velocity2D,
    v_prev: &Velocity2D,
    pooled: &PooledScan,
    tactile: &TactileReading,
    norm: &Normalization,
) -> Result<Observation, SensorError> {
    if !(pose.position().is_finite() && pose.theta.is_finite()) {
        return Err(SensorError::NonFiniteInput("pose"));
    }
    if !goal.is_finite() {
        return Err(SensorError::NonFiniteInput("goal"));
    }
    if !v_nav.is_finite() {
        return Err(SensorError::NonFiniteInput("v_nav"));
    }
    if !v_prev.is_finite() {
        return Err(SensorError::NonFiniteInput("v_prev"));
    }
    if pooled.d_l.iter().any(|v| !v.is_finite()) {
        return Err(SensorError::NonFiniteInput("d_l"));
    }
    if tactile.f_c.iter().any(|v| !v.is_finite()) {
        return Err(SensorError::NonFiniteInput("F_c"));
    }

    let c = |v: f64| v.clamp(-1.0, 1.0);
    let vel = |v: &Velocity2D| {
        [
            c(v.vx / norm.linear_velocity_max),
            c(v.vy / norm.linear_velocity_max),
            c(v.wz / norm.angular_velocity_max),
        ]
    };
    let d_g = pose.position().distance(goal);

    let mut out = [0.0; OBSERVATION_LEN];
    out[0] = d_g.min(norm.range_max) / norm.range_max;
    out[1] = c(goal_heading(pose, goal) / norm.angle_max);
    out[2..5].copy_from_slice(&vel(v_nav));
    out[5..8].copy_from_slice(&vel(v_prev));
    for (o, f) in out[8..14].iter_mut().zip(tactile.f_c) {
        *o = c(f / norm.force_max);
    }
    for (o, d) in out[14..32].iter_mut().zip(pooled.d_l) {
        *o = c(d / norm.range_max);
    }
    Ok(Observation(out))
}
