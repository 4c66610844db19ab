//! Closed-loop episodes for each planner variant, metrics, and the
//! scenario × variant comparison.

pub mod log;
pub mod metrics;

pub use log::{EpisodeLog, LogRow, Outcome};
pub use metrics::{compute_metrics, MetricsReport};

use crate::geometry::Vec2;
use crate::nav::{apf_velocity, plan_global_astar, Cell, NavError, OccupancyGrid};
use crate::policy::{clip_and_deadzone, PolicyWeights};
use crate::sensors::Normalization;
use crate::sim::{ScenarioSpec, SimError, TerminationKind, Velocity2D, CONTROL_DT};
use crate::train::{act, EnvConfig, Guidance, NavEnv, TrainError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("variant {0} needs a policy checkpoint")]
    MissingCheckpoint(&'static str),
    #[error("no logs to summarize")]
    EmptyInput,
    #[error("unexpected header, first bad column `{0}`")]
    Schema(String),
    #[error("line {line}: bad value in column `{column}`")]
    Parse { line: usize, column: String },
    #[error("reference path: {0}")]
    Reference(NavError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PlannerVariant {
    AstarEBandRL,
    AstarEBandAPF,
    AstarEBand,
    AstarDWA,
    RLOnly,
}

impl PlannerVariant {
    pub const ALL: [PlannerVariant; 5] = [
        PlannerVariant::AstarEBandRL,
        PlannerVariant::AstarEBandAPF,
        PlannerVariant::AstarEBand,
        PlannerVariant::AstarDWA,
        PlannerVariant::RLOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlannerVariant::AstarEBandRL => "astar-eband-rl",
            PlannerVariant::AstarEBandAPF => "astar-eband-apf",
            PlannerVariant::AstarEBand => "astar-eband",
            PlannerVariant::AstarDWA => "astar-dwa",
            PlannerVariant::RLOnly => "rl-only",
        }
    }

    pub fn needs_policy(&self) -> bool {
        matches!(self, PlannerVariant::AstarEBandRL | PlannerVariant::RLOnly)
    }

    fn guidance(&self) -> Guidance {
        match self {
            PlannerVariant::AstarDWA => Guidance::Dwa,
            PlannerVariant::RLOnly => Guidance::None,
            _ => Guidance::EBand,
        }
    }
}

impl FromStr for PlannerVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PlannerVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

/// Trained weights with the normalization they were trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub weights: PolicyWeights,
    pub norm: Normalization,
}

fn outcome_of(kind: TerminationKind) -> Outcome {
    match kind {
        TerminationKind::Running => Outcome::Running,
        TerminationKind::GoalReached => Outcome::GoalReached,
        TerminationKind::CollisionLimit => Outcome::CollisionLimit,
        TerminationKind::Timeout => Outcome::Timeout,
    }
}

fn snapshot(env: &NavEnv, t: f64, cmd: Velocity2D, nav: Velocity2D, reward: f64, n_contacts: usize) -> LogRow {
    LogRow {
        t,
        pose: env.world.robot,
        cmd,
        nav,
        reward,
        n_contacts,
        f_c: env.tactile.f_c,
        d_l: env.pooled.d_l,
        outcome: Outcome::Running,
    }
}

/// One closed-loop episode at 10 Hz. Learned variants act deterministically.
/// A planner failure stops a classical variant; learned variants carry on
/// with a zero navigation velocity. DWA with no admissible rollout stops
/// the robot for that step.
pub fn run_episode(
    scenario: &ScenarioSpec,
    variant: PlannerVariant,
    policy: Option<&Policy>,
    seed: u64,
) -> Result<EpisodeLog, BenchError> {
    if variant.needs_policy() && policy.is_none() {
        return Err(BenchError::MissingCheckpoint(variant.name()));
    }
    let cfg = EnvConfig {
        guidance: variant.guidance(),
        norm: policy.map_or_else(Normalization::default, |p| p.norm),
        ..EnvConfig::default()
    };
    let mut env = NavEnv::new(scenario, seed, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![snapshot(&env, 0.0, Velocity2D::ZERO, env.v_nav.unwrap_or(Velocity2D::ZERO), 0.0, 0)];
    if env.planner_error.is_some() {
        rows[0].outcome = Outcome::PlannerError;
    }
    let mut k = 0u32;
    loop {
        let failed = env.planner_error;
        let classical_failure = match (variant, failed) {
            (_, None) => false,
            (PlannerVariant::AstarDWA, Some(NavError::AllTrajectoriesCollide)) => false,
            (v, Some(_)) => !v.needs_policy(),
        };
        if classical_failure {
            rows.last_mut().expect("initial row").outcome = Outcome::PlannerFailure;
            break;
        }
        let nav = env.v_nav.unwrap_or(Velocity2D::ZERO);
        let cmd = match variant {
            PlannerVariant::AstarEBandRL | PlannerVariant::RLOnly => {
                let p = policy.expect("checked above");
                act(&p.weights, &env, &mut rng, true)?.command
            }
            PlannerVariant::AstarEBandAPF => {
                let apf = apf_velocity(&env.world.robot, env.world.goal, &env.pooled);
                clip_and_deadzone(&Velocity2D::new(nav.vx + apf.vx, nav.vy + apf.vy, nav.wz + apf.wz))
            }
            PlannerVariant::AstarEBand | PlannerVariant::AstarDWA => clip_and_deadzone(&nav),
        };
        let out = env.step(cmd)?;
        k += 1;
        let mut row = snapshot(&env, f64::from(k) * CONTROL_DT, cmd, nav, out.reward, out.contacts.len());
        if out.status.is_terminal() {
            row.outcome = outcome_of(out.status.kind);
            rows.push(row);
            break;
        }
        if env.planner_error.is_some() {
            row.outcome = Outcome::PlannerError;
        }
        rows.push(row);
    }
    Ok(EpisodeLog { rows })
}

/// Occupancy grid of the scenario's static geometry with every other cell Free.
pub fn static_map(scenario: &ScenarioSpec) -> OccupancyGrid {
    let blank = OccupancyGrid::covering(&scenario.bounds);
    let mut cells = vec![Cell::Free; blank.width * blank.height];
    let step = blank.resolution / 4.0;
    for w in scenario.walls.iter().chain(scenario.bounds.edges().iter()) {
        let n = (w.length() / step).ceil() as usize;
        for i in 0..=n {
            let p = w.a + (w.b - w.a) * (i as f64 / n.max(1) as f64);
            if let Some((x, y)) = blank.world_to_cell(p) {
                cells[y * blank.width + x] = Cell::Occupied;
            }
        }
    }
    OccupancyGrid::from_cells(blank.origin, blank.width, blank.height, blank.resolution, cells)
}

/// Shortest path on the fully known static map, from the exact start to
/// the exact goal.
pub fn reference_path(scenario: &ScenarioSpec) -> Result<Vec<Vec2>, BenchError> {
    let grid = static_map(scenario);
    let start = scenario.start_pose.position();
    let path = plan_global_astar(&grid, start, scenario.goal).map_err(BenchError::Reference)?;
    let mut pts = vec![start];
    let n = path.waypoints.len();
    pts.extend(path.waypoints.into_iter().skip(1).take(n.saturating_sub(2)));
    pts.push(scenario.goal);
    Ok(pts)
}

/// Per-trial seeds shared by every variant.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(6_364_136_223_846_793_005)
        .wrapping_add(1_442_695_040_888_963_407u64.wrapping_mul(trial as u64 + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub scenario: String,
    pub variant: PlannerVariant,
    pub trial: usize,
    pub seed: u64,
    pub log: EpisodeLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub variant: PlannerVariant,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ReportRow>,
    pub episodes: Vec<EpisodeRecord>,
}

/// Runs every (scenario, variant, trial) combination, `jobs` episodes at a
/// time; results are assembled in that fixed order.
pub fn compare_variants(
    scenarios: &[ScenarioSpec],
    variants: &[PlannerVariant],
    n_trials: usize,
    seed: u64,
    policy: Option<&Policy>,
    jobs: usize,
) -> Result<Comparison, BenchError> {
    if let Some(v) = variants.iter().find(|v| v.needs_policy() && policy.is_none()) {
        return Err(BenchError::MissingCheckpoint(v.name()));
    }
    let mut work = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for &v in variants {
            for trial in 0..n_trials {
                work.push((si, v, trial));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let run = |&(si, v, trial): &(usize, PlannerVariant, usize)| -> Result<EpisodeRecord, BenchError> {
        let s = &scenarios[si];
        let seed = trial_seed(seed, trial);
        Ok(EpisodeRecord {
            scenario: s.name.clone(),
            variant: v,
            trial,
            seed,
            log: run_episode(s, v, policy, seed)?,
        })
    };
    let episodes: Vec<EpisodeRecord> = pool.install(|| work.par_iter().map(run).collect::<Result<_, _>>())?;

    let mut rows = Vec::new();
    for s in scenarios {
        let reference = reference_path(s)?;
        for &v in variants {
            let logs: Vec<EpisodeLog> = episodes
                .iter()
                .filter(|e| e.scenario == s.name && e.variant == v)
                .map(|e| e.log.clone())
                .collect();
            rows.push(ReportRow {
                scenario: s.name.clone(),
                variant: v,
                metrics: compute_metrics(&logs, s.goal, &reference)?,
            });
        }
    }
    Ok(Comparison { rows, episodes })
}

pub const REPORT_HEADER: &str = "scenario,variant,trials,success_rate,collision_instances,time_to_goal,path_length,final_position_error,rmse_vs_reference,mean_speed";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.variant.name(),
            m.trials,
            m.success_rate,
            m.collision_instances,
            m.time_to_goal,
            m.path_length,
            m.final_position_error,
            m.rmse_vs_reference,
            m.mean_speed
        );
    }
    s
}

/// Grouped-bar series (one group per scenario, one bar per variant and
/// metric), the planner constants in force, and the published reference row.
pub fn plot_json(rows: &[ReportRow]) -> serde_json::Value {
    use crate::nav::{apf, dwa, eband, grid, REPLAN_EVERY};
    let metric_names = [
        "success_rate",
        "collision_instances",
        "time_to_goal",
        "path_length",
        "final_position_error",
        "rmse_vs_reference",
        "mean_speed",
    ];
    let finite = |v: f64| if v.is_finite() { serde_json::json!(v) } else { serde_json::Value::Null };
    let series: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let vals = [
                m.success_rate,
                m.collision_instances,
                m.time_to_goal,
                m.path_length,
                m.final_position_error,
                m.rmse_vs_reference,
                m.mean_speed,
            ];
            let values: serde_json::Map<String, serde_json::Value> = metric_names
                .iter()
                .zip(vals)
                .map(|(k, v)| (k.to_string(), finite(v)))
                .collect();
            serde_json::json!({
                "scenario": r.scenario,
                "variant": r.variant.name(),
                "trials": m.trials,
                "values": values,
            })
        })
        .collect();
    serde_json::json!({
        "metrics": metric_names,
        "series": series,
        "planner_constants": {
            "grid_resolution": grid::GRID_RESOLUTION,
            "inflation_radius": grid::INFLATION_RADIUS,
            "replan_every_steps": REPLAN_EVERY,
            "eband_iterations": eband::RELAX_ITERATIONS,
            "eband_step": eband::RELAX_STEP,
            "eband_bubble_radius": [eband::MIN_BUBBLE_RADIUS, eband::MAX_BUBBLE_RADIUS],
            "eband_lookahead": eband::LOOKAHEAD,
            "eband_slowdown_radius": eband::SLOWDOWN_RADIUS,
            "eband_heading_gain": eband::HEADING_GAIN,
            "apf_k_att": apf::K_ATTRACT,
            "apf_k_rep": apf::K_REPULSE,
            "apf_d0": apf::INFLUENCE_DISTANCE,
            "dwa_samples_per_axis": dwa::SAMPLES_PER_AXIS,
            "dwa_horizon": dwa::ROLLOUT_HORIZON,
            "dwa_weights": [dwa::HEADING_WEIGHT, dwa::CLEARANCE_WEIGHT, dwa::SPEED_WEIGHT],
            "dwa_accel": [dwa::LINEAR_ACCEL, dwa::ANGULAR_ACCEL],
        },
        "published_reference": {
            "variant": PlannerVariant::AstarEBandRL.name(),
            "success_rate": metrics::PUBLISHED_RL_SUCCESS_RATE,
            "collision_instances": metrics::PUBLISHED_RL_COLLISIONS,
            "time_to_goal": metrics::PUBLISHED_RL_TIME_TO_GOAL,
            "path_length": metrics::PUBLISHED_RL_PATH_LENGTH,
            "rmse_vs_reference": metrics::PUBLISHED_RL_RMSE,
            "mean_speed_band": metrics::PUBLISHED_SPEED_BAND,
        },
    })
}
