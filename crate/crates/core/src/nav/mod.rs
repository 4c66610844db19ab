//! Online mapping and the classical planners: A* global paths, the elastic
//! band that produces the navigation velocity, and APF/DWA baselines.

pub mod apf;
pub mod astar;
pub mod dwa;
pub mod eband;
pub mod grid;

pub use apf::apf_velocity;
pub use astar::{plan_global_astar, plan_global_astar_cells, GlobalPath, PathCost};
pub use dwa::dwa_velocity;
pub use eband::{eband_optimize, eband_velocity, Bubble, EBandState};
pub use grid::{update_occupancy, Cell, OccupancyGrid, GRID_RESOLUTION, INFLATION_RADIUS};

use crate::geometry::{Bounds, Vec2};
use crate::sensors::LidarScan;
use crate::sim::{Pose2D, Velocity2D};

/// Control steps between scheduled A* replans.
pub const REPLAN_EVERY: u32 = 10;
/// Distance along the global path of the intermediate goal handed to DWA.
pub const DWA_LOOKAHEAD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum NavError {
    #[error("empty path")]
    EmptyPath,
    #[error("elastic band lost overlap")]
    BandBroken,
    #[error("goal unreachable in the current map")]
    NoPath,
    #[error("start cell is occupied")]
    StartOccupied,
    #[error("point outside the grid")]
    OutOfGrid,
    #[error("every sampled trajectory collides")]
    AllTrajectoriesCollide,
}

/// Per-episode planning state: live map, current global path and band.
#[derive(Debug, Clone)]
pub struct NavPipeline {
    pub grid: OccupancyGrid,
    pub goal: Vec2,
    pub path: Option<GlobalPath>,
    pub band: Option<EBandState>,
    steps_since_plan: u32,
}

impl NavPipeline {
    pub fn new(bounds: &Bounds, goal: Vec2) -> Self {
        NavPipeline {
            grid: OccupancyGrid::covering(bounds),
            goal,
            path: None,
            band: None,
            steps_since_plan: 0,
        }
    }

    pub fn observe(&mut self, pose: &Pose2D, scan: &LidarScan) {
        self.grid.update_occupancy(pose, scan);
    }

    pub fn replan(&mut self, pose: &Pose2D) -> Result<&GlobalPath, NavError> {
        self.steps_since_plan = 0;
        self.path = None;
        let p = plan_global_astar(&self.grid, pose.position(), self.goal)?;
        Ok(self.path.insert(p))
    }

    /// Advances the replan clock and replans when due. Returns whether A* ran.
    fn tick(&mut self, pose: &Pose2D) -> Result<bool, NavError> {
        self.steps_since_plan += 1;
        if self.path.is_none() || self.steps_since_plan >= REPLAN_EVERY {
            self.replan(pose)?;
            return Ok(true);
        }
        Ok(false)
    }

    fn band_seed(&self, pose: &Pose2D, fresh: bool) -> Vec<Vec2> {
        let p = pose.position();
        let interior: Vec<Vec2> = match (&self.band, fresh) {
            (Some(b), false) => {
                let c = b.centers();
                let nearest = c
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
                    .map_or(0, |(i, _)| i);
                c[nearest..].to_vec()
            }
            _ => self.path.as_ref().map(|g| g.waypoints.clone()).unwrap_or_default(),
        };
        let mut seed = vec![p];
        seed.extend(interior.into_iter().filter(|&q| q != p));
        if seed.last() != Some(&self.goal) {
            if seed.len() > 1 {
                seed.pop();
            }
            seed.push(self.goal);
        }
        seed
    }

    /// Replans on schedule, relaxes the band from the robot to the goal and
    /// returns it. A broken or degenerate band triggers one fresh replan.
    pub fn update_band(&mut self, pose: &Pose2D) -> Result<&EBandState, NavError> {
        let planned = self.tick(pose)?;
        let stale = self.band.as_ref().is_some_and(|b| b.needs_replan);
        if stale && !planned {
            self.replan(pose)?;
        }
        let fresh = planned || stale;
        let band = match eband_optimize(&self.band_seed(pose, fresh), &self.grid) {
            Ok(b) => b,
            Err(NavError::BandBroken) if !fresh => {
                self.replan(pose)?;
                eband_optimize(&self.band_seed(pose, true), &self.grid)?
            }
            Err(e) => return Err(e),
        };
        Ok(self.band.insert(band))
    }

    pub fn eband_command(&mut self, pose: &Pose2D, max_v: f64) -> Result<Velocity2D, NavError> {
        let result = self
            .update_band(pose)
            .and_then(|band| eband_velocity(band, pose, max_v));
        if result.is_err() {
            self.band = None;
        }
        result
    }

    /// Point [`DWA_LOOKAHEAD`] metres along the global path past the waypoint
    /// nearest `p`, or the goal when the path is shorter.
    pub fn lookahead_point(&self, p: Vec2) -> Vec2 {
        let Some(path) = &self.path else {
            return self.goal;
        };
        let w = &path.waypoints;
        let nearest = w
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
            .map_or(0, |(i, _)| i);
        let mut travelled = 0.0;
        for i in nearest..w.len().saturating_sub(1) {
            travelled += w[i].distance(w[i + 1]);
            if travelled >= DWA_LOOKAHEAD {
                return w[i + 1];
            }
        }
        self.goal
    }

    pub fn dwa_command(&mut self, pose: &Pose2D, vel: &Velocity2D) -> Result<Velocity2D, NavError> {
        self.tick(pose)?;
        let target = self.lookahead_point(pose.position());
        dwa_velocity(pose, vel, target, &self.grid)
    }
}
