//! Closed-loop navigation environment: simulator, sensors, online map and
//! local planner behind a reset/step interface.

use super::reward::{compute_reward, RewardConfig, StepState};
use super::TrainError;
use crate::nav::{NavError, NavPipeline};
use crate::policy::{blend_velocity, clip_and_deadzone, MAX_LINEAR_SPEED};
use crate::sensors::{
    apply_scan_noise, build_observation, goal_heading, lidar_scan, min_pool, tactile_read, Normalization,
    Observation, PooledScan, TactileReading, SCAN_NOISE_STD,
};
use crate::sim::{
    check_termination, resolve_contacts, ContactSet, ScenarioSpec, TerminationKind, TerminationStatus, Velocity2D,
    World, SUBSTEPS_PER_CONTROL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which planner supplies the navigation velocity `v_nav`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guidance {
    EBand,
    Dwa,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub reward: RewardConfig,
    pub scan_noise_std: f64,
    pub eband_max_speed: f64,
    pub guidance: Guidance,
    pub norm: Normalization,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            reward: RewardConfig::default(),
            scan_noise_std: SCAN_NOISE_STD,
            eband_max_speed: MAX_LINEAR_SPEED,
            guidance: Guidance::EBand,
            norm: Normalization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub status: TerminationStatus,
    pub contacts: ContactSet,
}

#[derive(Debug, Clone)]
pub struct NavEnv {
    pub cfg: EnvConfig,
    pub world: World,
    pub nav: NavPipeline,
    noise_rng: ChaCha8Rng,
    pub pooled: PooledScan,
    pub tactile: TactileReading,
    /// Planner velocity for the current step, `None` when the planner failed.
    pub v_nav: Option<Velocity2D>,
    pub planner_error: Option<NavError>,
    pub v_prev: Velocity2D,
    state: StepState,
    pub status: TerminationStatus,
}

const NOISE_STREAM: u64 = 0x5EED_0F_5CA7;

impl NavEnv {
    pub fn new(scenario: &ScenarioSpec, seed: u64, cfg: EnvConfig) -> Result<Self, TrainError> {
        let world = World::new(scenario, seed)?;
        let nav = NavPipeline::new(&scenario.bounds, scenario.goal);
        let tactile = tactile_read(&resolve_contacts(&world.robot, world.robot_radius, &world));
        let mut env = NavEnv {
            cfg,
            world,
            nav,
            noise_rng: ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM),
            pooled: PooledScan { d_l: [0.0; 18] },
            tactile,
            v_nav: None,
            planner_error: None,
            v_prev: Velocity2D::ZERO,
            state: StepState {
                d_g: 0.0,
                theta_g: 0.0,
                min_d_l: 0.0,
                forces: [0.0; 6],
            },
            // termination is only judged after a step
            status: check_termination(f64::INFINITY, 0, 0),
        };
        env.sense();
        env.state = env.step_state();
        Ok(env)
    }

    fn step_state(&self) -> StepState {
        StepState {
            d_g: self.world.goal_distance(),
            theta_g: goal_heading(&self.world.robot, self.world.goal),
            min_d_l: self.pooled.min(),
            forces: self.tactile.f_c,
        }
    }

    /// Scan, map update, pooled noisy ranges and the planner velocity.
    fn sense(&mut self) {
        let pose = self.world.robot;
        let scan = lidar_scan(&self.world, &pose);
        self.pooled = apply_scan_noise(&min_pool(&scan), self.cfg.scan_noise_std, &mut self.noise_rng);
        let nav = match self.cfg.guidance {
            Guidance::None => Ok(None),
            Guidance::EBand => {
                self.nav.observe(&pose, &scan);
                self.nav.eband_command(&pose, self.cfg.eband_max_speed).map(Some)
            }
            Guidance::Dwa => {
                self.nav.observe(&pose, &scan);
                self.nav.dwa_command(&pose, &self.world.velocity).map(Some)
            }
        };
        match nav {
            Ok(v) => {
                self.v_nav = v;
                self.planner_error = None;
            }
            Err(e) => {
                self.v_nav = None;
                self.planner_error = Some(e);
            }
        }
    }

    pub fn observation(&self) -> Observation {
        build_observation(
            &self.world.robot,
            self.world.goal,
            &self.v_nav.unwrap_or(Velocity2D::ZERO),
            &self.v_prev,
            &self.pooled,
            &self.tactile,
            &self.cfg.norm,
        )
        .expect("simulator state is finite")
    }

    /// Clipped blend of a policy action with the current planner velocity.
    pub fn policy_command(&self, action: &[f64; 3]) -> Velocity2D {
        clip_and_deadzone(&blend_velocity(&Velocity2D::from_array(*action), self.v_nav.as_ref()))
    }

    pub fn is_done(&self) -> bool {
        self.status.is_terminal()
    }

    /// Executes `cmd` for one control period.
    pub fn step(&mut self, cmd: Velocity2D) -> Result<StepOutcome, TrainError> {
        if self.is_done() {
            return Err(TrainError::EpisodeOver);
        }
        let contacts = self.world.step_physics(cmd, SUBSTEPS_PER_CONTROL)?;
        self.tactile = tactile_read(&contacts);
        self.v_prev = cmd;
        let steps = self.status.step_count + 1;
        let collisions = self.status.collision_step_count + u32::from(!contacts.is_empty());
        self.sense();
        let cur = self.step_state();
        let reward = compute_reward(&self.cfg.reward, &self.state, &cur);
        self.state = cur;
        self.status = check_termination(cur.d_g, collisions, steps);
        Ok(StepOutcome {
            reward,
            status: self.status,
            contacts,
        })
    }

    pub fn goal_reached(&self) -> bool {
        self.status.kind == TerminationKind::GoalReached
    }
}
