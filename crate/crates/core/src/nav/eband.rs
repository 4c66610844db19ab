//! Elastic band: the path as a chain of overlapping clearance bubbles,
//! relaxed by internal tension and obstacle repulsion, and the velocity
//! command that follows it.

use super::grid::{OccupancyGrid, GRID_RESOLUTION};
use super::NavError;
use crate::geometry::{wrap_angle, Vec2};
use crate::policy::MAX_ANGULAR_SPEED;
use crate::sim::{Pose2D, Velocity2D};

pub const RELAX_ITERATIONS: usize = 30;
pub const RELAX_STEP: f64 = 0.05;
pub const MIN_BUBBLE_RADIUS: f64 = 0.1;
pub const MAX_BUBBLE_RADIUS: f64 = 1.0;
/// Obstacles closer than this push bubbles away.
pub const REPULSION_RANGE: f64 = 0.5;
pub const TENSION_GAIN: f64 = 0.5;
pub const LOOKAHEAD: f64 = 0.3;
pub const SLOWDOWN_RADIUS: f64 = 1.0;
pub const HEADING_GAIN: f64 = 1.0;
/// Bubble centres closer than this to an Occupied cell centre mean the band
/// runs through an obstacle.
const BROKEN_CLEARANCE: f64 = 0.5 * GRID_RESOLUTION;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EBandState {
    pub bubbles: Vec<Bubble>,
    /// Some bubble has less than [`MIN_BUBBLE_RADIUS`] of raw clearance.
    pub needs_replan: bool,
}

impl EBandState {
    pub fn centers(&self) -> Vec<Vec2> {
        self.bubbles.iter().map(|b| b.center).collect()
    }

    pub fn min_clearance(&self, grid: &OccupancyGrid) -> f64 {
        self.bubbles
            .iter()
            .map(|b| grid.clearance_at(b.center))
            .fold(f64::INFINITY, f64::min)
    }
}

fn bubble_radius(clearance: f64) -> f64 {
    clearance.clamp(MIN_BUBBLE_RADIUS, MAX_BUBBLE_RADIUS)
}

/// Resamples a polyline so consecutive points are at most `spacing` apart.
fn densify(path: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let d = w[0].distance(w[1]);
        if d == 0.0 {
            continue;
        }
        let n = (d / spacing).ceil() as usize;
        for k in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    out
}

fn crosses_occupied(centers: &[Vec2], grid: &OccupancyGrid) -> bool {
    centers.windows(2).any(|w| {
        let n = (w[0].distance(w[1]) / (0.25 * GRID_RESOLUTION)).ceil().max(1.0) as usize;
        (0..=n).any(|k| grid.is_occupied_at(w[0] + (w[1] - w[0]) * (k as f64 / n as f64)))
    })
}

/// Seeds bubbles along `path` and relaxes them. Endpoints stay pinned; a
/// move is rejected if it would break overlap with a neighbour or drop the
/// band's minimum clearance.
pub fn eband_optimize(path: &[Vec2], grid: &OccupancyGrid) -> Result<EBandState, NavError> {
    if path.is_empty() {
        return Err(NavError::EmptyPath);
    }
    let mut centers = densify(path, GRID_RESOLUTION);
    let mut clear: Vec<f64> = centers.iter().map(|&c| grid.clearance_at(c)).collect();
    let floor = clear.iter().copied().fold(f64::INFINITY, f64::min);

    let n = centers.len();
    for _ in 0..RELAX_ITERATIONS {
        for i in 1..n.saturating_sub(1) {
            let c = centers[i];
            let tension = ((centers[i - 1] - c).normalized() + (centers[i + 1] - c).normalized()) * TENSION_GAIN;
            let repulsion = if clear[i] < REPULSION_RANGE {
                grid.clearance_gradient(c).normalized() * (REPULSION_RANGE - clear[i])
            } else {
                Vec2::ZERO
            };
            let moved = c + (tension + repulsion) * RELAX_STEP;
            let moved_clear = grid.clearance_at(moved);
            if moved_clear < floor {
                continue;
            }
            let r = bubble_radius(moved_clear);
            let overlaps = |j: usize| centers[j].distance(moved) < r + bubble_radius(clear[j]);
            if overlaps(i - 1) && overlaps(i + 1) {
                centers[i] = moved;
                clear[i] = moved_clear;
            }
        }
    }

    if clear.iter().any(|&c| c < BROKEN_CLEARANCE) || crosses_occupied(&centers, grid) {
        return Err(NavError::BandBroken);
    }
    let needs_replan = clear.iter().any(|&c| c < MIN_BUBBLE_RADIUS);
    let bubbles: Vec<Bubble> = centers
        .into_iter()
        .zip(clear)
        .map(|(center, c)| Bubble {
            center,
            radius: bubble_radius(c),
        })
        .collect();
    if bubbles
        .windows(2)
        .any(|w| w[0].center.distance(w[1].center) >= w[0].radius + w[1].radius)
    {
        return Err(NavError::BandBroken);
    }
    Ok(EBandState { bubbles, needs_replan })
}

/// Body-frame velocity toward the first bubble at least [`LOOKAHEAD`] ahead,
/// slowed proportionally inside [`SLOWDOWN_RADIUS`] of the final bubble, and
/// turning toward the band tangent.
pub fn eband_velocity(band: &EBandState, pose: &Pose2D, max_v: f64) -> Result<Velocity2D, NavError> {
    let b = &band.bubbles;
    if b.is_empty() {
        return Err(NavError::BandBroken);
    }
    let p = pose.position();
    let nearest = b
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.center.distance(p).total_cmp(&y.1.center.distance(p)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let target = (nearest..b.len())
        .find(|&j| b[j].center.distance(p) >= LOOKAHEAD)
        .unwrap_or(b.len() - 1);

    let to_target = b[target].center - p;
    let dist_final = b[b.len() - 1].center.distance(p);
    let speed = max_v * (dist_final / SLOWDOWN_RADIUS).min(1.0);
    let lin = pose.to_local(to_target).normalized() * speed;

    // tangent measured over a lookahead-length stretch of band
    let tangent = match (target + 1..b.len()).find(|&j| b[j].center.distance(b[target].center) >= LOOKAHEAD) {
        Some(j) => b[j].center - b[target].center,
        None if target > 0 => {
            let back = (0..target)
                .rev()
                .find(|&j| b[j].center.distance(b[target].center) >= LOOKAHEAD)
                .unwrap_or(0);
            b[target].center - b[back].center
        }
        None => to_target,
    };
    let wz = if tangent.norm() > 0.0 {
        (HEADING_GAIN * wrap_angle(tangent.angle() - pose.theta)).clamp(-MAX_ANGULAR_SPEED, MAX_ANGULAR_SPEED)
    } else {
        0.0
    };
    Ok(Velocity2D::new(lin.x, lin.y, wz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::grid::Cell;

    fn grid_with_wall_at_y(wall_y: f64) -> OccupancyGrid {
        let (w, h) = (120, 80);
        let mut cells = vec![Cell::Free; w * h];
        let row = (wall_y / GRID_RESOLUTION).floor() as usize;
        for x in 0..w {
            cells[row * w + x] = Cell::Occupied;
        }
        OccupancyGrid::from_cells(Vec2::ZERO, w, h, GRID_RESOLUTION, cells)
    }

    fn free_grid() -> OccupancyGrid {
        let (w, h) = (120, 80);
        OccupancyGrid::from_cells(Vec2::ZERO, w, h, GRID_RESOLUTION, vec![Cell::Free; w * h])
    }

    #[test]
    fn straight_band_is_a_fixed_point() {
        let g = free_grid();
        let path: Vec<Vec2> = (0..=40).map(|i| Vec2::new(0.5 + i as f64 * 0.1, 2.0)).collect();
        let band = eband_optimize(&path, &g).unwrap();
        assert!(band.bubbles.iter().all(|b| b.center.y == 2.0));
        assert!(!band.needs_replan);
    }

    #[test]
    fn two_waypoint_band_keeps_endpoints() {
        let g = grid_with_wall_at_y(1.0);
        let a = Vec2::new(1.0, 1.3);
        let z = Vec2::new(4.0, 1.3);
        let band = eband_optimize(&[a, z], &g).unwrap();
        assert_eq!(band.bubbles.first().unwrap().center, a);
        assert_eq!(band.bubbles.last().unwrap().center, z);
    }

    #[test]
    fn band_moves_away_from_wall() {
        let g = grid_with_wall_at_y(1.0);
        // wall cell centre at y = 1.025; path 0.2 m above it
        let path: Vec<Vec2> = (0..=30).map(|i| Vec2::new(1.0 + i as f64 * 0.1, 1.225)).collect();
        let before: Vec<f64> = path.iter().map(|&p| g.clearance_at(p)).collect();
        let band = eband_optimize(&path, &g).unwrap();
        let interior = &band.bubbles[1..band.bubbles.len() - 1];
        let mean_after: f64 = interior.iter().map(|b| g.clearance_at(b.center)).sum::<f64>() / interior.len() as f64;
        let mean_before: f64 = before.iter().sum::<f64>() / before.len() as f64;
        assert!(mean_after > mean_before + 0.05, "{mean_before} -> {mean_after}");
        assert!(band.min_clearance(&g) >= before.iter().copied().fold(f64::INFINITY, f64::min));
        for w in band.bubbles.windows(2) {
            assert!(w[0].center.distance(w[1].center) < w[0].radius + w[1].radius);
        }
    }

    #[test]
    fn band_through_obstacle_is_broken() {
        let g = grid_with_wall_at_y(1.0);
        let path = [Vec2::new(1.0, 0.5), Vec2::new(1.0, 1.5)];
        assert!(matches!(eband_optimize(&path, &g), Err(NavError::BandBroken)));
    }

    fn band(points: &[Vec2]) -> EBandState {
        EBandState {
            bubbles: points
                .iter()
                .map(|&center| Bubble { center, radius: 0.5 })
                .collect(),
            needs_replan: false,
        }
    }

    #[test]
    fn aligned_target_gives_full_forward_speed() {
        let pts: Vec<Vec2> = (0..=30).map(|i| Vec2::new(i as f64 * 0.1, 0.0)).collect();
        let v = eband_velocity(&band(&pts), &Pose2D::new(0.0, 0.0, 0.0), 0.5).unwrap();
        assert!((v.vx - 0.5).abs() < 1e-12);
        assert!(v.vy.abs() < 1e-12 && v.wz.abs() < 1e-12);
    }

    #[test]
    fn slows_down_near_final_bubble() {
        let pts: Vec<Vec2> = (0..=5).map(|i| Vec2::new(i as f64 * 0.1, 0.0)).collect();
        let v = eband_velocity(&band(&pts), &Pose2D::new(0.0, 0.0, 0.0), 0.4).unwrap();
        assert!((v.linear().norm() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn bubble_to_the_left_gives_lateral_command() {
        let pts: Vec<Vec2> = (0..=20).map(|i| Vec2::new(0.0, i as f64 * 0.1)).collect();
        let v = eband_velocity(&band(&pts), &Pose2D::new(0.0, 0.0, 0.0), 0.5).unwrap();
        // geometry: target is straight up the +y axis, tangent heading +90°
        assert!(v.vy > 0.0 && v.vy.abs() > 10.0 * v.vx.abs());
        assert!(v.wz > 0.0);
    }

    #[test]
    fn empty_band_is_broken() {
        let b = EBandState {
            bubbles: vec![],
            needs_replan: false,
        };
        assert!(matches!(
            eband_velocity(&b, &Pose2D::default(), 0.5),
            Err(NavError::BandBroken)
        ));
    }
}
